//! `prunekit prune`: turn a score table into a kept/removed manifest.

use std::path::PathBuf;

use clap::Args;
use prunekit_core::io::{read_scores, write_manifest};
use prunekit_core::pruning::{prune_balanced, prune_by_score, prune_random, Budget};
use prunekit_core::{Error, Result};
use serde_json::json;

use crate::commands::DirectionArg;
use crate::support;

#[derive(Debug, Args)]
pub struct PruneArgs {
    /// Score table ranking the candidates.
    #[arg(long, value_name = "SCORES")]
    scores: PathBuf,

    /// Remove this fraction of the dataset (0 to 1).
    #[arg(long, conflicts_with = "count")]
    fraction: Option<f64>,

    /// Remove exactly this many samples.
    #[arg(long)]
    count: Option<usize>,

    /// Which end of the score ordering survives.
    #[arg(long, value_enum, default_value_t = DirectionArg::KeepHigh)]
    direction: DirectionArg,

    /// Spread removals evenly across class labels (needs --labels).
    #[arg(long)]
    balanced: bool,

    /// Trace or labeled embedding file supplying class labels.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,

    /// Ignore the scores and remove a uniformly random subset instead.
    #[arg(long)]
    random: bool,

    /// Seed for --random.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output manifest (JSON).
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
}

impl PruneArgs {
    fn budget(&self) -> Result<Budget> {
        match (self.fraction, self.count) {
            (Some(f), None) => Ok(Budget::Fraction(f)),
            (None, Some(c)) => Ok(Budget::Count(c)),
            _ => Err(Error::invalid(
                "exactly one of --fraction and --count is required",
            )),
        }
    }

    pub fn run(&self) -> Result<()> {
        let budget = self.budget()?;
        let config = json!({
            "command": "prune",
            "scores": support::path_str(&self.scores),
            "fraction": self.fraction,
            "count": self.count,
            "direction": format!("{}", prunekit_core::types::Direction::from(self.direction)),
            "balanced": self.balanced,
            "labels": self.labels.as_deref().map(support::path_str),
            "random": self.random,
            "seed": self.random.then_some(self.seed),
            "output": support::path_str(&self.output),
        });
        support::print_header(self.random.then_some(self.seed), &config);
        support::guard_output(&self.output, self.force)?;

        if self.balanced && self.labels.is_none() {
            return Err(Error::invalid("--balanced needs --labels"));
        }
        let labels = match &self.labels {
            Some(path) => Some(support::read_labels(path)?),
            None => None,
        };
        let table = read_scores(&self.scores)?;
        let manifest = if self.random {
            let ids: Vec<String> = table.entries.keys().cloned().collect();
            prune_random(&ids, labels.as_ref(), budget, self.seed, self.balanced)?
        } else if self.balanced {
            prune_balanced(
                &table,
                labels.as_ref().unwrap(),
                budget,
                self.direction.into(),
            )?
        } else {
            prune_by_score(&table, budget, self.direction.into())?
        };
        write_manifest(&manifest, &self.output)?;
        println!(
            "wrote {} (kept {}, removed {})",
            self.output.display(),
            manifest.kept.len(),
            manifest.removed.len()
        );
        Ok(())
    }
}
