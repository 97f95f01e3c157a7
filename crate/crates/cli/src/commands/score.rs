//! `prunekit score`: traces in, score table out.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use prunekit_core::io::{read_traces, write_scores};
use prunekit_core::scoring::{score_traces_du, score_traces_fp, Aggregation, DuConfig, FpConfig};
use prunekit_core::Result;
use serde_json::json;

use crate::support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// Mean sliding-window standard deviation of the certainty trace.
    Du,
    /// Aggregated magnitude of a band of the trace's frequency spectrum.
    Fp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AggregationArg {
    Sum,
    Mean,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Certainty trace file (.traces.jsonl).
    #[arg(value_name = "TRACES")]
    traces: PathBuf,

    /// Scoring metric.
    #[arg(long, value_enum)]
    metric: MetricArg,

    /// Sliding-window length for du.
    #[arg(long, default_value_t = 10)]
    window: usize,

    /// Divide the du window sum by K - J instead of the window count.
    #[arg(long)]
    paper_denominator: bool,

    /// First frequency bin of the fp band (the constant bin 0 is excluded).
    #[arg(long, default_value_t = 1)]
    lo: usize,

    /// Last bin of the fp band; defaults to the highest available bin.
    #[arg(long)]
    hi: Option<usize>,

    /// How fp combines the band's bin magnitudes.
    #[arg(long, value_enum, default_value_t = AggregationArg::Sum)]
    aggregation: AggregationArg,

    /// Output score file (.scores.jsonl).
    #[arg(short, long, value_name = "OUT")]
    output: PathBuf,

    /// Overwrite the output if it exists.
    #[arg(long)]
    force: bool,
}

impl ScoreArgs {
    pub fn run(&self) -> Result<()> {
        let config = json!({
            "command": "score",
            "traces": support::path_str(&self.traces),
            "metric": format!("{:?}", self.metric).to_lowercase(),
            "window": self.window,
            "paper_denominator": self.paper_denominator,
            "lo": self.lo,
            "hi": self.hi,
            "aggregation": format!("{:?}", self.aggregation).to_lowercase(),
            "output": support::path_str(&self.output),
        });
        support::print_header(None, &config);
        support::guard_output(&self.output, self.force)?;

        let file = read_traces(&self.traces)?;
        for warning in &file.warnings {
            eprintln!("warning: {warning}");
        }
        let table = match self.metric {
            MetricArg::Du => {
                let cfg = DuConfig {
                    window: self.window,
                    paper_denominator: self.paper_denominator,
                };
                score_traces_du(&file.traces, &cfg)?
            }
            MetricArg::Fp => {
                let cfg = FpConfig {
                    lo: self.lo,
                    hi: self.hi,
                    aggregation: match self.aggregation {
                        AggregationArg::Sum => Aggregation::Sum,
                        AggregationArg::Mean => Aggregation::Mean,
                    },
                };
                score_traces_fp(&file.traces, &cfg)?
            }
        };
        write_scores(&table, &self.output)?;
        println!("wrote {} ({} scores)", self.output.display(), table.len());
        Ok(())
    }
}
