//! `prunekit analyze`: read-only views over traces, manifests, and scores.

use std::path::PathBuf;

use clap::{Args, Subcommand};
use prunekit_core::io::{read_manifest, read_scores, read_traces};
use prunekit_core::scoring::{spectral_report, write_spectral_correlations, write_spectral_csv};
use prunekit_core::{pruning, Error, Result};
use serde_json::json;

use crate::support;

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(subcommand)]
    kind: AnalyzeCommand,
}

#[derive(Debug, Subcommand)]
enum AnalyzeCommand {
    /// Per-sample frequency-band magnitudes and their correlation with du.
    Spectral(SpectralArgs),
    /// Fraction of removals shared by two equal-size manifests.
    Overlap(OverlapArgs),
    /// Score-distribution histogram as CSV.
    Hist(HistArgs),
}

#[derive(Debug, Args)]
struct SpectralArgs {
    /// Certainty trace file.
    #[arg(long, value_name = "TRACES")]
    traces: PathBuf,

    /// du score table for the same samples.
    #[arg(long, value_name = "SCORES")]
    scores: PathBuf,

    /// Output CSV (id, du, band_low, band_high).
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Also write the two correlation coefficients as JSON.
    #[arg(long, value_name = "OUT")]
    correlations_out: Option<PathBuf>,

    /// Overwrite outputs that exist.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct OverlapArgs {
    /// First manifest.
    #[arg(value_name = "MANIFEST_A")]
    a: PathBuf,

    /// Second manifest over the same ids with the same removal count.
    #[arg(value_name = "MANIFEST_B")]
    b: PathBuf,
}

#[derive(Debug, Args)]
struct HistArgs {
    /// Score table to bin.
    #[arg(long, value_name = "SCORES")]
    scores: PathBuf,

    /// Number of equal-width bins over [min, max].
    #[arg(long, default_value_t = 20)]
    bins: usize,

    /// Output CSV (bin_lo, bin_hi, count).
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
}

impl AnalyzeArgs {
    pub fn run(&self) -> Result<()> {
        match &self.kind {
            AnalyzeCommand::Spectral(args) => args.run(),
            AnalyzeCommand::Overlap(args) => args.run(),
            AnalyzeCommand::Hist(args) => args.run(),
        }
    }
}

impl SpectralArgs {
    fn run(&self) -> Result<()> {
        let config = json!({
            "command": "analyze spectral",
            "traces": support::path_str(&self.traces),
            "scores": support::path_str(&self.scores),
            "output": support::path_str(&self.output),
            "correlations_out": self.correlations_out.as_deref().map(support::path_str),
        });
        support::print_header(None, &config);
        support::guard_output(&self.output, self.force)?;
        if let Some(path) = &self.correlations_out {
            support::guard_output(path, self.force)?;
        }

        let file = read_traces(&self.traces)?;
        for warning in &file.warnings {
            eprintln!("warning: {warning}");
        }
        let du = read_scores(&self.scores)?;
        let report = spectral_report(&file.traces, &du)?;
        write_spectral_csv(&report, &self.output)?;
        if let Some(path) = &self.correlations_out {
            write_spectral_correlations(&report, path)?;
        }
        println!("r_low={} r_high={}", report.r_low, report.r_high);
        println!(
            "wrote {} ({} rows)",
            self.output.display(),
            report.rows.len()
        );
        Ok(())
    }
}

impl OverlapArgs {
    fn run(&self) -> Result<()> {
        let config = json!({
            "command": "analyze overlap",
            "a": support::path_str(&self.a),
            "b": support::path_str(&self.b),
        });
        support::print_header(None, &config);
        let a = read_manifest(&self.a)?;
        let b = read_manifest(&self.b)?;
        println!("{}", pruning::overlap(&a, &b)?);
        Ok(())
    }
}

impl HistArgs {
    fn run(&self) -> Result<()> {
        let config = json!({
            "command": "analyze hist",
            "scores": support::path_str(&self.scores),
            "bins": self.bins,
            "output": support::path_str(&self.output),
        });
        support::print_header(None, &config);
        support::guard_output(&self.output, self.force)?;
        if self.bins == 0 {
            return Err(Error::invalid("--bins must be at least 1"));
        }

        let table = read_scores(&self.scores)?;
        if table.is_empty() {
            return Err(Error::invalid("cannot bin an empty score table"));
        }
        let values: Vec<f64> = table.entries.values().copied().collect();
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / self.bins as f64;
        let mut counts = vec![0usize; self.bins];
        for &v in &values {
            // Degenerate all-equal tables land in the first bin; the max
            // itself belongs to the last bin, not a phantom one past it.
            let idx = if width > 0.0 {
                (((v - min) / width) as usize).min(self.bins - 1)
            } else {
                0
            };
            counts[idx] += 1;
        }

        use std::io::Write;
        let file = std::fs::File::create(&self.output).map_err(|e| Error::io(&self.output, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io_err = |e| Error::io(&self.output, e);
        writeln!(w, "bin_lo,bin_hi,count").map_err(io_err)?;
        for (i, count) in counts.iter().enumerate() {
            let lo = min + width * i as f64;
            let hi = if i + 1 == self.bins {
                max
            } else {
                min + width * (i + 1) as f64
            };
            writeln!(w, "{lo},{hi},{count}").map_err(io_err)?;
        }
        w.flush().map_err(io_err)?;
        println!("wrote {} ({} bins)", self.output.display(), self.bins);
        Ok(())
    }
}
