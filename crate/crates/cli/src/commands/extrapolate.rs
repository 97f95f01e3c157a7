//! `prunekit extrapolate`: score unscored samples from their nearest
//! scored neighbors in embedding space.

use std::path::PathBuf;

use clap::Args;
use prunekit_core::extrapolate::{extrapolate_scores, knn_preset, KNN_PRESET_NAMES};
use prunekit_core::io::{read_embeddings, read_scores, write_scores};
use prunekit_core::types::KnnConfig;
use prunekit_core::{Error, Result};
use serde_json::json;

use crate::commands::DistanceArg;
use crate::support;

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    /// Embeddings of the already-scored source set.
    #[arg(long, value_name = "EMB")]
    source_embeddings: PathBuf,

    /// Score table aligned with the source embeddings.
    #[arg(long, value_name = "SCORES")]
    source_scores: PathBuf,

    /// Embeddings of the samples to score.
    #[arg(long, value_name = "EMB")]
    dest_embeddings: PathBuf,

    /// Neighbor count.
    #[arg(
        short,
        long,
        required_unless_present = "preset",
        conflicts_with = "preset"
    )]
    k: Option<usize>,

    /// Distance metric.
    #[arg(long, value_enum, default_value_t = DistanceArg::Euclidean, conflicts_with = "preset")]
    distance: DistanceArg,

    /// Named (k, distance) combination: du-linf, fp-linf, du-l2, fp-l2.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output score file for the destination set.
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
}

impl ExtrapolateArgs {
    fn knn_config(&self) -> Result<KnnConfig> {
        match &self.preset {
            Some(name) => knn_preset(name).ok_or_else(|| {
                Error::invalid(format!(
                    "unknown preset '{name}'; expected one of: {}",
                    KNN_PRESET_NAMES.join(", ")
                ))
            }),
            // clap enforces that -k is present when --preset is absent.
            None => Ok(KnnConfig::new(self.k.unwrap(), self.distance.into())),
        }
    }

    pub fn run(&self) -> Result<()> {
        let cfg = self.knn_config()?;
        let config = json!({
            "command": "extrapolate",
            "source_embeddings": support::path_str(&self.source_embeddings),
            "source_scores": support::path_str(&self.source_scores),
            "dest_embeddings": support::path_str(&self.dest_embeddings),
            "k": cfg.k,
            "distance": cfg.metric.to_string(),
            "output": support::path_str(&self.output),
        });
        support::print_header(None, &config);
        support::guard_output(&self.output, self.force)?;

        let source = read_embeddings(&self.source_embeddings)?;
        let source_scores = read_scores(&self.source_scores)?;
        let dest = read_embeddings(&self.dest_embeddings)?;
        let (table, warnings) = extrapolate_scores(&source, &source_scores, &dest, &cfg)?;
        for warning in &warnings {
            eprintln!("warning: {warning}");
        }
        write_scores(&table, &self.output)?;
        println!("wrote {} ({} scores)", self.output.display(), table.len());
        Ok(())
    }
}
