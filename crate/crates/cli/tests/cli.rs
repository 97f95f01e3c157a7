//! Behavior tests for the `prunekit` binary: exit codes, the
//! reproducibility header, file handling, and each subcommand's contract.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use prunekit_core::io::{read_manifest, read_scores, write_embeddings, write_scores, write_traces};
use prunekit_core::types::{CertaintyTrace, EmbeddingSet, Metric, Provenance, ScoreTable, Variant};
use serde_json::json;
use tempfile::TempDir;

fn prunekit(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prunekit"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary launches")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

fn assert_exit(out: &Output, want: i32) {
    assert_eq!(
        out.status.code(),
        Some(want),
        "stdout:\n{}\nstderr:\n{}",
        stdout_of(out),
        stderr_of(out)
    );
}

fn trace(id: &str, label: u32, certainties: &[f64]) -> CertaintyTrace {
    CertaintyTrace {
        id: id.into(),
        label,
        variant: Variant::Clean,
        certainties: certainties.to_vec(),
    }
}

fn write_trace_fixture(path: &Path, specs: &[(&str, u32, &[f64])]) {
    let traces: Vec<CertaintyTrace> = specs
        .iter()
        .map(|(id, label, cs)| trace(id, *label, cs))
        .collect();
    write_traces(&traces, path).unwrap();
}

fn write_score_fixture(path: &Path, pairs: &[(&str, f64)]) {
    let mut table = ScoreTable::new(Metric::Du, json!({}), Provenance::Computed);
    table.entries = pairs
        .iter()
        .map(|(id, s)| (id.to_string(), *s))
        .collect::<BTreeMap<_, _>>();
    write_scores(&table, path).unwrap();
}

#[test]
fn header_reports_version_seed_digest_and_argv() {
    let dir = TempDir::new().unwrap();
    write_trace_fixture(
        dir.path().join("t.traces.jsonl").as_ref(),
        &[("a", 0, &[0.5; 12]), ("b", 1, &[0.25; 12])],
    );
    let out = prunekit(
        dir.path(),
        &[
            "score",
            "t.traces.jsonl",
            "--metric",
            "du",
            "-o",
            "t.scores.jsonl",
        ],
    );
    assert_exit(&out, 0);
    let stdout = stdout_of(&out);
    let header = stdout.lines().next().unwrap();
    assert!(
        header.starts_with("prunekit 0.1.0 | seed=- | digest="),
        "{header}"
    );
    let digest = header
        .split("digest=")
        .nth(1)
        .unwrap()
        .split(' ')
        .next()
        .unwrap();
    assert_eq!(digest.len(), 16);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
    let argv_json = header.split(" | argv=").nth(1).unwrap();
    let argv: Vec<String> = serde_json::from_str(argv_json).unwrap();
    assert_eq!(argv[0], "score");
}

#[test]
fn score_du_of_constant_traces_is_zero() {
    let dir = TempDir::new().unwrap();
    write_trace_fixture(
        dir.path().join("t.traces.jsonl").as_ref(),
        &[("a", 0, &[0.7; 15]), ("b", 1, &[0.1; 15])],
    );
    let out = prunekit(
        dir.path(),
        &[
            "score",
            "t.traces.jsonl",
            "--metric",
            "du",
            "-o",
            "du.scores.jsonl",
        ],
    );
    assert_exit(&out, 0);
    let table = read_scores(&dir.path().join("du.scores.jsonl")).unwrap();
    assert_eq!(table.len(), 2);
    for (id, &score) in &table.entries {
        assert_eq!(score, 0.0, "trace {id}");
    }
}

#[test]
fn missing_input_exits_with_io_code() {
    let dir = TempDir::new().unwrap();
    let out = prunekit(
        dir.path(),
        &["score", "absent.jsonl", "--metric", "du", "-o", "x.jsonl"],
    );
    assert_exit(&out, 2);
    assert!(stderr_of(&out).contains("absent.jsonl"));
}

#[test]
fn unknown_flag_exits_with_validation_code() {
    let dir = TempDir::new().unwrap();
    let out = prunekit(dir.path(), &["score", "t.jsonl", "--bogus"]);
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("--bogus"));
}

#[test]
fn help_and_version_exit_cleanly() {
    let dir = TempDir::new().unwrap();
    let help = prunekit(dir.path(), &["--help"]);
    assert_exit(&help, 0);
    for name in [
        "simulate",
        "score",
        "extrapolate",
        "gridsearch",
        "prune",
        "analyze",
    ] {
        assert!(stdout_of(&help).contains(name), "help lists {name}");
    }
    let version = prunekit(dir.path(), &["--version"]);
    assert_exit(&version, 0);
    assert!(stdout_of(&version).contains("0.1.0"));
}

#[test]
fn balanced_prune_removes_two_per_class_on_the_four_plus_four_fixture() {
    let dir = TempDir::new().unwrap();
    let specs: Vec<(String, u32, Vec<f64>)> = (0..8)
        .map(|i| {
            let value = 0.1 + 0.1 * i as f64;
            (format!("s{i}"), (i % 2) as u32, vec![value; 12])
        })
        .collect();
    let traces: Vec<CertaintyTrace> = specs
        .iter()
        .map(|(id, label, cs)| trace(id, *label, cs))
        .collect();
    write_traces(&traces, &dir.path().join("t.traces.jsonl")).unwrap();
    write_score_fixture(
        dir.path().join("s.scores.jsonl").as_ref(),
        &(0..8)
            .map(|i| {
                (
                    ["s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"][i],
                    i as f64,
                )
            })
            .collect::<Vec<_>>(),
    );
    let out = prunekit(
        dir.path(),
        &[
            "prune",
            "--scores",
            "s.scores.jsonl",
            "--fraction",
            "0.5",
            "--balanced",
            "--labels",
            "t.traces.jsonl",
            "-o",
            "m.json",
        ],
    );
    assert_exit(&out, 0);
    let manifest = read_manifest(&dir.path().join("m.json")).unwrap();
    assert_eq!(manifest.removed.len(), 4);
    let removed_even = manifest
        .removed
        .iter()
        .filter(|id| id.trim_start_matches('s').parse::<usize>().unwrap() % 2 == 0)
        .count();
    assert_eq!(
        removed_even, 2,
        "two removals per class: {:?}",
        manifest.removed
    );

    // A second run must refuse to clobber, then yield to --force.
    let again = prunekit(
        dir.path(),
        &[
            "prune",
            "--scores",
            "s.scores.jsonl",
            "--fraction",
            "0.5",
            "--balanced",
            "--labels",
            "t.traces.jsonl",
            "-o",
            "m.json",
        ],
    );
    assert_exit(&again, 1);
    assert!(stderr_of(&again).contains("--force"));
    let forced = prunekit(
        dir.path(),
        &[
            "prune",
            "--scores",
            "s.scores.jsonl",
            "--fraction",
            "0.5",
            "--balanced",
            "--labels",
            "t.traces.jsonl",
            "-o",
            "m.json",
            "--force",
        ],
    );
    assert_exit(&forced, 0);
}

#[test]
fn prune_requires_exactly_one_budget() {
    let dir = TempDir::new().unwrap();
    write_score_fixture(dir.path().join("s.scores.jsonl").as_ref(), &[("a", 1.0)]);
    let neither = prunekit(
        dir.path(),
        &["prune", "--scores", "s.scores.jsonl", "-o", "m.json"],
    );
    assert_exit(&neither, 1);
    assert!(stderr_of(&neither).contains("--fraction"));
    let both = prunekit(
        dir.path(),
        &[
            "prune",
            "--scores",
            "s.scores.jsonl",
            "--fraction",
            "0.5",
            "--count",
            "1",
            "-o",
            "m.json",
        ],
    );
    assert_exit(&both, 1);
}

#[test]
fn random_prune_reproduces_per_seed() {
    let dir = TempDir::new().unwrap();
    let pairs: Vec<(String, f64)> = (0..30).map(|i| (format!("id{i:02}"), i as f64)).collect();
    let borrowed: Vec<(&str, f64)> = pairs.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    write_score_fixture(dir.path().join("s.scores.jsonl").as_ref(), &borrowed);
    let run = |output: &str, seed: &str, force: bool| {
        let mut args = vec![
            "prune",
            "--scores",
            "s.scores.jsonl",
            "--fraction",
            "0.3",
            "--random",
            "--seed",
            seed,
            "-o",
            output,
        ];
        if force {
            args.push("--force");
        }
        let out = prunekit(dir.path(), &args);
        assert_exit(&out, 0);
        std::fs::read(dir.path().join(output)).unwrap()
    };
    let a1 = run("a.json", "5", false);
    let a2 = run("a.json", "5", true);
    let b = run("b.json", "6", false);
    assert_eq!(a1, a2, "same seed, same manifest bytes");
    assert_ne!(a1, b, "different seed, different manifest");
}

#[test]
fn overlap_prints_the_shared_removal_fraction() {
    let dir = TempDir::new().unwrap();
    let pairs: Vec<(String, f64)> = (0..10).map(|i| (format!("id{i}"), i as f64)).collect();
    let borrowed: Vec<(&str, f64)> = pairs.iter().map(|(id, s)| (id.as_str(), *s)).collect();
    write_score_fixture(dir.path().join("s.scores.jsonl").as_ref(), &borrowed);
    for (name, direction) in [("hi.json", "keep-high"), ("lo.json", "keep-low")] {
        let out = prunekit(
            dir.path(),
            &[
                "prune",
                "--scores",
                "s.scores.jsonl",
                "--fraction",
                "0.3",
                "--direction",
                direction,
                "-o",
                name,
            ],
        );
        assert_exit(&out, 0);
    }
    // keep-high removes the 3 lowest, keep-low the 3 highest: disjoint.
    let disjoint = prunekit(dir.path(), &["analyze", "overlap", "hi.json", "lo.json"]);
    assert_exit(&disjoint, 0);
    assert_eq!(stdout_of(&disjoint).lines().last().unwrap(), "0");
    let full = prunekit(dir.path(), &["analyze", "overlap", "hi.json", "hi.json"]);
    assert_exit(&full, 0);
    assert_eq!(stdout_of(&full).lines().last().unwrap(), "1");
}

#[test]
fn extrapolate_rejects_unknown_presets() {
    let dir = TempDir::new().unwrap();
    let out = prunekit(
        dir.path(),
        &[
            "extrapolate",
            "--source-embeddings",
            "a",
            "--source-scores",
            "b",
            "--dest-embeddings",
            "c",
            "--preset",
            "nope",
            "-o",
            "d",
        ],
    );
    assert_exit(&out, 1);
    assert!(stderr_of(&out).contains("du-linf"), "{}", stderr_of(&out));
}

#[test]
fn extrapolate_with_k1_copies_the_nearest_source_score() {
    let dir = TempDir::new().unwrap();
    let mut source = EmbeddingSet::new(2);
    source.push("a", &[0.0, 0.0], None).unwrap();
    source.push("b", &[1.0, 0.0], None).unwrap();
    source.push("c", &[0.0, 1.0], None).unwrap();
    write_embeddings(&source, &dir.path().join("src.emb.jsonl")).unwrap();
    let mut dest = EmbeddingSet::new(2);
    dest.push("q1", &[0.1, 0.0], None).unwrap();
    dest.push("q2", &[0.1, 0.9], None).unwrap();
    write_embeddings(&dest, &dir.path().join("dst.emb.jsonl")).unwrap();
    write_score_fixture(
        dir.path().join("src.scores.jsonl").as_ref(),
        &[("a", 0.25), ("b", 0.5), ("c", 0.75)],
    );
    let out = prunekit(
        dir.path(),
        &[
            "extrapolate",
            "--source-embeddings",
            "src.emb.jsonl",
            "--source-scores",
            "src.scores.jsonl",
            "--dest-embeddings",
            "dst.emb.jsonl",
            "-k",
            "1",
            "-o",
            "out.scores.jsonl",
        ],
    );
    assert_exit(&out, 0);
    let table = read_scores(&dir.path().join("out.scores.jsonl")).unwrap();
    assert_eq!(table.entries["q1"], 0.25);
    assert_eq!(table.entries["q2"], 0.75);
    assert_eq!(table.provenance, Provenance::Extrapolated);
}

#[test]
fn gridsearch_ranks_an_exact_lookup_first() {
    let dir = TempDir::new().unwrap();
    let mut source = EmbeddingSet::new(2);
    let mut holdout = EmbeddingSet::new(2);
    let mut source_pairs = Vec::new();
    let mut holdout_pairs = Vec::new();
    for i in 0..24 {
        let x = (i % 6) as f64 / 6.0;
        let y = (i / 6) as f64 / 4.0;
        let id = format!("p{i:02}");
        // Truth is the first coordinate: smooth, so near neighbors agree.
        if i % 3 == 0 {
            holdout.push(id.clone(), &[x, y], None).unwrap();
            holdout_pairs.push((id, x));
        } else {
            source.push(id.clone(), &[x, y], None).unwrap();
            source_pairs.push((id, x));
        }
    }
    write_embeddings(&source, &dir.path().join("src.emb.jsonl")).unwrap();
    write_embeddings(&holdout, &dir.path().join("hold.emb.jsonl")).unwrap();
    let borrow = |pairs: &[(String, f64)]| -> Vec<(String, f64)> { pairs.to_vec() };
    for (path, pairs) in [
        ("src.scores.jsonl", borrow(&source_pairs)),
        ("hold.scores.jsonl", borrow(&holdout_pairs)),
    ] {
        let as_ref: Vec<(&str, f64)> = pairs.iter().map(|(id, s)| (id.as_str(), *s)).collect();
        write_score_fixture(dir.path().join(path).as_ref(), &as_ref);
    }
    std::fs::write(
        dir.path().join("grid.json"),
        serde_json::to_string_pretty(&json!({
            "k_values": [1, 2, 4],
            "metrics": ["euclidean"],
            "sources": [{
                "name": "lattice",
                "embeddings": ["src.emb.jsonl"],
                "scores": ["src.scores.jsonl"],
            }],
            "holdout": { "embeddings": "hold.emb.jsonl", "scores": "hold.scores.jsonl" },
        }))
        .unwrap(),
    )
    .unwrap();
    let out = prunekit(dir.path(), &["gridsearch", "grid.json", "-o", "grid.csv"]);
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "source_variant,metric,k,mae");
    // Header, three cells, one baseline row.
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[4].split(',').count(), 2, "baseline row: {}", lines[4]);
    let best: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(best[0], "lattice");
    let best_mae: f64 = best[3].parse().unwrap();
    let baseline_mae: f64 = lines[4].split(',').nth(1).unwrap().parse().unwrap();
    assert!(best_mae < baseline_mae, "{best_mae} vs {baseline_mae}");
}

#[test]
fn hist_buckets_the_score_range() {
    let dir = TempDir::new().unwrap();
    write_score_fixture(
        dir.path().join("s.scores.jsonl").as_ref(),
        &[("a", 0.0), ("b", 0.25), ("c", 0.5), ("d", 0.75), ("e", 1.0)],
    );
    let out = prunekit(
        dir.path(),
        &[
            "analyze",
            "hist",
            "--scores",
            "s.scores.jsonl",
            "--bins",
            "4",
            "-o",
            "h.csv",
        ],
    );
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(dir.path().join("h.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "bin_lo,bin_hi,count");
    let counts: Vec<usize> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    // The maximum falls into the last bin rather than one past it.
    assert_eq!(counts, vec![1, 1, 1, 2]);
    assert!(lines[4].starts_with("0.75,1,"), "{}", lines[4]);
}

#[test]
fn spectral_writes_csv_and_correlations() {
    let dir = TempDir::new().unwrap();
    let mut specs = Vec::new();
    for i in 0..12 {
        let certainties: Vec<f64> = (0..30)
            .map(|t| 0.5 + 0.3 * ((t as f64) * 0.7 + i as f64).sin() * (i as f64 / 12.0))
            .collect();
        specs.push((format!("s{i:02}"), 0u32, certainties));
    }
    let traces: Vec<CertaintyTrace> = specs
        .iter()
        .map(|(id, label, cs)| trace(id, *label, cs))
        .collect();
    write_traces(&traces, &dir.path().join("t.traces.jsonl")).unwrap();
    let score = prunekit(
        dir.path(),
        &[
            "score",
            "t.traces.jsonl",
            "--metric",
            "du",
            "-o",
            "du.scores.jsonl",
        ],
    );
    assert_exit(&score, 0);
    let out = prunekit(
        dir.path(),
        &[
            "analyze",
            "spectral",
            "--traces",
            "t.traces.jsonl",
            "--scores",
            "du.scores.jsonl",
            "-o",
            "sp.csv",
            "--correlations-out",
            "corr.json",
        ],
    );
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(dir.path().join("sp.csv")).unwrap();
    assert!(csv.starts_with("id,du,band_low,band_high\n"));
    assert_eq!(csv.lines().count(), 13);
    let corr: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("corr.json")).unwrap())
            .unwrap();
    assert!(corr["r_low"].as_f64().unwrap().is_finite());
    assert!(corr["r_high"].as_f64().unwrap().is_finite());
}

#[test]
fn simulate_standard_run_emits_only_clean_traces() {
    let dir = TempDir::new().unwrap();
    let out = prunekit(
        dir.path(),
        &[
            "simulate",
            "-o",
            "run",
            "--seed",
            "3",
            "--samples-per-class",
            "12",
            "--epochs",
            "12",
            "--emit-embeddings",
        ],
    );
    assert_exit(&out, 0);
    assert!(dir.path().join("run.clean.traces.jsonl").exists());
    assert!(
        !dir.path().join("run.adversarial.traces.jsonl").exists(),
        "standard training records no adversarial traces by default"
    );
    assert!(dir.path().join("run.embeddings.jsonl").exists());
    let log: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run.log.json")).unwrap())
            .unwrap();
    assert_eq!(log["epochs"].as_array().unwrap().len(), 12);
    assert!(log["final"]["clean_accuracy"].as_f64().unwrap() >= 0.0);
    assert!(log["final"]["robust_accuracy"].is_null());

    let score = prunekit(
        dir.path(),
        &[
            "score",
            "run.clean.traces.jsonl",
            "--metric",
            "du",
            "-o",
            "du.scores.jsonl",
        ],
    );
    assert_exit(&score, 0);
    let table = read_scores(&dir.path().join("du.scores.jsonl")).unwrap();
    assert_eq!(table.len(), 24);
}

#[test]
fn thread_cap_env_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let mut specs = Vec::new();
    for i in 0..40 {
        let certainties: Vec<f64> = (0..25)
            .map(|t| 0.5 + 0.4 * ((t * (i + 1)) as f64 * 0.31).sin())
            .collect();
        specs.push((format!("s{i:02}"), 0u32, certainties));
    }
    let traces: Vec<CertaintyTrace> = specs
        .iter()
        .map(|(id, label, cs)| trace(id, *label, cs))
        .collect();
    write_traces(&traces, &dir.path().join("t.traces.jsonl")).unwrap();
    let mut bytes = Vec::new();
    for (threads, output) in [("1", "a.jsonl"), ("4", "b.jsonl")] {
        let out = Command::new(env!("CARGO_BIN_EXE_prunekit"))
            .current_dir(dir.path())
            .env("PRUNEKIT_THREADS", threads)
            .args(["score", "t.traces.jsonl", "--metric", "fp", "-o", output])
            .output()
            .unwrap();
        assert_exit(&out, 0);
        bytes.push(std::fs::read(dir.path().join(output)).unwrap());
    }
    assert_eq!(
        bytes[0], bytes[1],
        "worker count must not leak into results"
    );
}
