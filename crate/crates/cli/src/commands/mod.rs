//! Subcommand implementations. Each one is a thin shell: resolve flags,
//! print the reproducibility header, guard the outputs, call the library.

mod analyze;
mod extrapolate;
mod gridsearch;
mod prune;
mod score;
mod simulate;

use clap::{Subcommand, ValueEnum};
use prunekit_core::types::{Direction, DistanceMetric};
use prunekit_core::Result;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a toy dataset, train on it, and emit certainty traces.
    Simulate(simulate::SimulateArgs),
    /// Turn certainty traces into an importance score table.
    Score(score::ScoreArgs),
    /// Assign scores to unscored samples from their nearest scored neighbors.
    Extrapolate(extrapolate::ExtrapolateArgs),
    /// Sweep (source, metric, k) combinations against a scored holdout.
    Gridsearch(gridsearch::GridsearchArgs),
    /// Split a scored dataset into kept and removed halves.
    Prune(prune::PruneArgs),
    /// Inspect traces, manifests, and score distributions.
    Analyze(analyze::AnalyzeArgs),
}

impl Command {
    pub fn run(&self) -> Result<()> {
        match self {
            Command::Simulate(args) => args.run(),
            Command::Score(args) => args.run(),
            Command::Extrapolate(args) => args.run(),
            Command::Gridsearch(args) => args.run(),
            Command::Prune(args) => args.run(),
            Command::Analyze(args) => args.run(),
        }
    }
}

/// `--distance` flag values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    Euclidean,
    Cosine,
}

impl From<DistanceArg> for DistanceMetric {
    fn from(value: DistanceArg) -> Self {
        match value {
            DistanceArg::Euclidean => DistanceMetric::Euclidean,
            DistanceArg::Cosine => DistanceMetric::Cosine,
        }
    }
}

/// `--direction` flag values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    /// Remove the lowest-scoring samples.
    KeepHigh,
    /// Remove the highest-scoring samples.
    KeepLow,
}

impl From<DirectionArg> for Direction {
    fn from(value: DirectionArg) -> Self {
        match value {
            DirectionArg::KeepHigh => Direction::KeepHigh,
            DirectionArg::KeepLow => Direction::KeepLow,
        }
    }
}
