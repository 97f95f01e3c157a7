//! `prunekit gridsearch`: sweep (source variant, distance, k) combinations
//! against a scored holdout and rank them by mean absolute error.
//!
//! The grid is described by a JSON file:
//!
//! ```json
//! {
//!   "k_values": [1, 2, 4, 8],
//!   "metrics": ["euclidean", "cosine"],
//!   "sources": [
//!     { "name": "original", "embeddings": ["a.emb"], "scores": ["a.scores.jsonl"] },
//!     { "name": "merged", "embeddings": ["a.emb", "b.emb"],
//!       "scores": ["a.scores.jsonl", "b.scores.jsonl"] }
//!   ],
//!   "holdout": { "embeddings": "h.emb", "scores": "h.scores.jsonl" }
//! }
//! ```
//!
//! `holdout` may instead be `{ "from": "<source name>", "fraction": 0.25,
//! "seed": 7 }`, which carves a deterministic holdout out of the named
//! source before the sweep.

use std::path::{Path, PathBuf};

use clap::Args;
use prunekit_core::extrapolate::{
    grid_search, merge_sources, write_grid_csv, GridSource, GridSpec,
};
use prunekit_core::io::{read_embeddings, read_scores};
use prunekit_core::rng::PortableRng;
use prunekit_core::types::{DistanceMetric, EmbeddingSet, ScoreTable};
use prunekit_core::{Error, Result};
use serde::Deserialize;
use serde_json::json;

use crate::support;

#[derive(Debug, Args)]
pub struct GridsearchArgs {
    /// Grid description file (JSON).
    #[arg(value_name = "GRID")]
    grid: PathBuf,

    /// Output CSV of cells ranked best-first, plus per-source baselines.
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFile {
    k_values: Vec<usize>,
    metrics: Vec<DistanceMetric>,
    sources: Vec<GridFileSource>,
    holdout: HoldoutSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFileSource {
    name: String,
    embeddings: Vec<PathBuf>,
    scores: Vec<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum HoldoutSpec {
    Files {
        embeddings: PathBuf,
        scores: PathBuf,
    },
    Split {
        from: String,
        fraction: f64,
        seed: u64,
    },
}

fn load_grid_file(path: &Path) -> Result<GridFile> {
    let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&body).map_err(|e| Error::format(path, e.to_string()))
}

fn load_source(spec: &GridFileSource, grid_path: &Path) -> Result<(GridSource, Vec<String>)> {
    if spec.embeddings.is_empty() || spec.embeddings.len() != spec.scores.len() {
        return Err(Error::format(
            grid_path,
            format!(
                "source '{}' needs matching embeddings and scores lists, got {} and {}",
                spec.name,
                spec.embeddings.len(),
                spec.scores.len()
            ),
        ));
    }
    let mut parts = Vec::with_capacity(spec.embeddings.len());
    for (emb_path, score_path) in spec.embeddings.iter().zip(&spec.scores) {
        parts.push(GridSource {
            name: spec.name.clone(),
            embeddings: read_embeddings(emb_path)?,
            scores: read_scores(score_path)?,
        });
    }
    merge_sources(&spec.name, &parts)
}

/// Carves `fraction` of a source into a holdout. Ids are shuffled in sorted
/// order under a dedicated seed, so the split is independent of file layout;
/// both halves keep their original row order.
fn split_holdout(
    source: &mut GridSource,
    fraction: f64,
    seed: u64,
) -> Result<(EmbeddingSet, ScoreTable)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "holdout fraction must be strictly between 0 and 1, got {fraction}"
        )));
    }
    let n = source.embeddings.len();
    let take = ((n as f64) * fraction).floor() as usize;
    if take == 0 || take == n {
        return Err(Error::invalid(format!(
            "holdout fraction {fraction} of {n} rows leaves an empty side"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| source.embeddings.ids[a].cmp(&source.embeddings.ids[b]));
    let mut rng = PortableRng::seed_from_u64(seed);
    rng.partial_shuffle(&mut order, take);
    let mut holdout_rows = order[..take].to_vec();
    holdout_rows.sort_unstable();

    let mut holdout_emb = EmbeddingSet::new(source.embeddings.dim);
    let mut holdout_truth = ScoreTable::new(
        source.scores.metric,
        source.scores.params.clone(),
        source.scores.provenance,
    );
    let mut rest_emb = EmbeddingSet::new(source.embeddings.dim);
    let mut rest_scores = holdout_truth.clone();
    let mut next_holdout = holdout_rows.iter().copied().peekable();
    for i in 0..n {
        let id = &source.embeddings.ids[i];
        let score = *source.scores.entries.get(id).ok_or_else(|| {
            Error::invalid(format!(
                "source '{}' has no score for id '{id}'",
                source.name
            ))
        })?;
        let row = source.embeddings.row(i);
        let label = source.embeddings.labels[i];
        if next_holdout.peek() == Some(&i) {
            next_holdout.next();
            holdout_emb.push(id.clone(), row, label)?;
            holdout_truth.entries.insert(id.clone(), score);
        } else {
            rest_emb.push(id.clone(), row, label)?;
            rest_scores.entries.insert(id.clone(), score);
        }
    }
    source.embeddings = rest_emb;
    source.scores = rest_scores;
    Ok((holdout_emb, holdout_truth))
}

impl GridsearchArgs {
    pub fn run(&self) -> Result<()> {
        let file = load_grid_file(&self.grid)?;
        let seed = match &file.holdout {
            HoldoutSpec::Split { seed, .. } => Some(*seed),
            HoldoutSpec::Files { .. } => None,
        };
        let config = json!({
            "command": "gridsearch",
            "grid": support::path_str(&self.grid),
            "output": support::path_str(&self.output),
        });
        support::print_header(seed, &config);
        support::guard_output(&self.output, self.force)?;

        let mut sources = Vec::with_capacity(file.sources.len());
        for spec in &file.sources {
            let (source, warnings) = load_source(spec, &self.grid)?;
            for warning in warnings {
                eprintln!("warning: source '{}': {warning}", spec.name);
            }
            sources.push(source);
        }

        let (holdout, truth) = match &file.holdout {
            HoldoutSpec::Files { embeddings, scores } => {
                (read_embeddings(embeddings)?, read_scores(scores)?)
            }
            HoldoutSpec::Split {
                from,
                fraction,
                seed,
            } => {
                let source = sources
                    .iter_mut()
                    .find(|s| &s.name == from)
                    .ok_or_else(|| {
                        Error::format(&self.grid, format!("holdout names unknown source '{from}'"))
                    })?;
                split_holdout(source, *fraction, *seed)?
            }
        };

        let spec = GridSpec {
            k_values: file.k_values,
            metrics: file.metrics,
            sources,
        };
        let result = grid_search(&spec, &holdout, &truth)?;
        write_grid_csv(&result, &self.output)?;
        if let Some(best) = result.best() {
            println!(
                "best: source={} metric={} k={} mae={}",
                best.source, best.metric, best.k, best.mae
            );
        }
        println!(
            "wrote {} ({} cells)",
            self.output.display(),
            result.cells.len()
        );
        Ok(())
    }
}
