//! Plumbing shared by the subcommands: the worker-pool cap, the
//! reproducibility header, output-clobber guards, and label loading.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use prunekit_core::io::{read_embeddings, read_traces};
use prunekit_core::{Error, Result};
use sha2::{Digest, Sha256};

/// Environment variable capping the rayon worker pool.
pub const THREADS_ENV: &str = "PRUNEKIT_THREADS";

/// Applies `PRUNEKIT_THREADS` to the global rayon pool. Must run before any
/// parallel work; the global pool can only be configured once.
pub fn cap_rayon_threads() {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) if n >= 1 => {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
        _ => eprintln!("warning: ignoring {THREADS_ENV}={raw:?}: expected a positive integer"),
    }
}

/// Prints the reproducibility header: tool version, the seed in effect (`-`
/// when the subcommand takes none), a digest of the resolved configuration,
/// and the literal argument vector needed to replay the run.
pub fn print_header(seed: Option<u64>, config: &serde_json::Value) {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    println!(
        "prunekit {} | seed={seed} | digest={} | argv={}",
        env!("CARGO_PKG_VERSION"),
        config_digest(config),
        serde_json::to_string(&argv).expect("argv serializes"),
    );
}

/// First 16 hex characters of the SHA-256 of the canonical config JSON.
/// `serde_json` objects keep their keys sorted, so two invocations that
/// resolve to the same configuration share a digest regardless of flag
/// order or which defaults were spelled out.
pub fn config_digest(config: &serde_json::Value) -> String {
    let hash = Sha256::digest(config.to_string().as_bytes());
    let mut hex = String::with_capacity(16);
    for byte in &hash[..8] {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

/// Refuses to clobber an existing file unless `--force` was given.
pub fn guard_output(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(Error::invalid(format!(
            "output '{}' already exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

/// Appends a suffix to a path without treating any of it as an extension,
/// so `out/run1` + `.clean.traces.jsonl` works even with dotted prefixes.
pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut os = prefix.as_os_str().to_owned();
    os.push(suffix);
    PathBuf::from(os)
}

/// Loads id -> class label from either a trace file or a labeled embedding
/// file; the two formats are distinguished by parsing, not extension.
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, u32>> {
    let trace_err = match read_traces(path) {
        Ok(file) => {
            return Ok(file.traces.into_iter().map(|t| (t.id, t.label)).collect());
        }
        Err(e) => e,
    };
    match read_embeddings(path) {
        Ok(set) => {
            let mut labels = BTreeMap::new();
            for (id, label) in set.ids.iter().zip(&set.labels) {
                match label {
                    Some(l) => {
                        labels.insert(id.clone(), *l);
                    }
                    None => {
                        return Err(Error::format(
                            path,
                            format!("row '{id}' carries no class label"),
                        ));
                    }
                }
            }
            Ok(labels)
        }
        Err(emb_err) => Err(Error::format(
            path,
            format!("not readable as traces ({trace_err}) nor as embeddings ({emb_err})"),
        )),
    }
}

/// Lossless path rendering for config digests.
pub fn path_str(path: &Path) -> String {
    path.display().to_string()
}
