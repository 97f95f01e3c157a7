//! `prunekit simulate`: generate a blob dataset, train a small network on
//! it, and emit per-sample certainty traces plus a training log.
//!
//! Files land next to the `-o` prefix: `<prefix>.clean.traces.jsonl`,
//! `<prefix>.adversarial.traces.jsonl` (when recorded), `<prefix>.log.json`,
//! and optionally `<prefix>.embeddings.jsonl` with the raw inputs.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use prunekit_core::io::{write_embeddings, write_traces};
use prunekit_core::types::EmbeddingSet;
use prunekit_core::{Error, Result};
use prunekit_toytrain::attack::AttackConfig;
use prunekit_toytrain::data::make_blobs;
use prunekit_toytrain::loss::LossConfig;
use prunekit_toytrain::model::ToyModel;
use prunekit_toytrain::train::{evaluate, train, TrainConfig};
use serde_json::json;

use crate::support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    /// Cross-entropy on clean inputs.
    StandardCe,
    /// Cross-entropy on attacked inputs.
    AdversarialCe,
    /// Clean cross-entropy plus a weighted clean-vs-attacked KL term.
    Trades,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Linf,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecordArg {
    Clean,
    Adversarial,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output path prefix; artifacts are written as PREFIX.<name>.
    #[arg(short, long, value_name = "PREFIX")]
    output: PathBuf,

    /// Overwrite existing artifacts.
    #[arg(long)]
    force: bool,

    /// Master seed; data, weights, and training draw from separate streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    // Dataset shape.
    /// Samples generated per class.
    #[arg(long, default_value_t = 100)]
    samples_per_class: usize,

    /// Number of classes (one Gaussian blob each).
    #[arg(long, default_value_t = 2)]
    classes: usize,

    /// Input dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,

    /// Blob spacing in standard deviations; lower values overlap more.
    #[arg(long, default_value_t = 4.0)]
    separation: f64,

    // Model and optimizer.
    /// Hidden layer width, repeatable for depth (e.g. --hidden 16 --hidden 8).
    #[arg(long, value_name = "WIDTH", default_values_t = [8])]
    hidden: Vec<usize>,

    #[arg(long, default_value_t = 60)]
    epochs: usize,

    #[arg(long, default_value_t = 32)]
    batch_size: usize,

    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,

    #[arg(long, default_value_t = 0.9)]
    momentum: f64,

    /// Training objective.
    #[arg(long, value_enum, default_value_t = LossArg::StandardCe)]
    loss: LossArg,

    /// KL weight for the trades objective.
    #[arg(long, default_value_t = 5.0)]
    trades_beta: f64,

    /// Mass moved from the true class to the uniform target distribution.
    #[arg(long, default_value_t = 0.0)]
    label_smoothing: f64,

    // Attack used for adversarial objectives and adversarial recording.
    #[arg(long, value_enum, default_value_t = NormArg::Linf)]
    attack_norm: NormArg,

    /// Attack radius; defaults to the chosen norm's preset.
    #[arg(long)]
    epsilon: Option<f64>,

    /// Attack step size; defaults to the chosen norm's preset.
    #[arg(long)]
    step_size: Option<f64>,

    #[arg(long, default_value_t = 10)]
    attack_iterations: usize,

    /// Start attacks from the clean point instead of a random one.
    #[arg(long)]
    no_random_start: bool,

    // Recording.
    /// Trace variants to record; defaults to clean, plus adversarial
    /// whenever the objective attacks.
    #[arg(long, value_enum, value_delimiter = ',', value_name = "VARIANTS")]
    record: Vec<RecordArg>,

    /// Record each sample's last training perturbation instead of running a
    /// fresh epoch-end attack.
    #[arg(long)]
    reuse_train_perturbation: bool,

    /// Also write the inputs as PREFIX.embeddings.jsonl.
    #[arg(long)]
    emit_embeddings: bool,
}

impl SimulateArgs {
    fn loss_config(&self) -> LossConfig {
        let mut cfg = match self.loss {
            LossArg::StandardCe => LossConfig::standard(),
            LossArg::AdversarialCe => LossConfig::adversarial(),
            LossArg::Trades => LossConfig::trades(self.trades_beta),
        };
        cfg.label_smoothing = self.label_smoothing;
        cfg
    }

    fn attack_config(&self) -> AttackConfig {
        let mut cfg = match self.attack_norm {
            NormArg::Linf => AttackConfig::preset_linf(),
            NormArg::L2 => AttackConfig::preset_l2(),
        };
        if let Some(eps) = self.epsilon {
            cfg.epsilon = eps;
        }
        if let Some(step) = self.step_size {
            cfg.step_size = step;
        }
        cfg.iterations = self.attack_iterations;
        cfg.random_start = !self.no_random_start;
        cfg
    }

    fn record_flags(&self, loss: &LossConfig) -> (bool, bool) {
        if self.record.is_empty() {
            (true, loss.needs_adversarial())
        } else {
            (
                self.record.contains(&RecordArg::Clean),
                self.record.contains(&RecordArg::Adversarial),
            )
        }
    }

    pub fn run(&self) -> Result<()> {
        let loss = self.loss_config();
        let attack = self.attack_config();
        let (record_clean, record_adversarial) = self.record_flags(&loss);
        let needs_attack = loss.needs_adversarial() || record_adversarial;

        let config = json!({
            "command": "simulate",
            "seed": self.seed,
            "samples_per_class": self.samples_per_class,
            "classes": self.classes,
            "dim": self.dim,
            "separation": self.separation,
            "hidden": self.hidden,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "loss": format!("{:?}", loss.kind),
            "trades_beta": loss.trades_beta,
            "label_smoothing": loss.label_smoothing,
            "attack": needs_attack.then(|| json!({
                "norm": attack.norm.to_string(),
                "epsilon": attack.epsilon,
                "step_size": attack.step_size,
                "iterations": attack.iterations,
                "random_start": attack.random_start,
            })),
            "record_clean": record_clean,
            "record_adversarial": record_adversarial,
            "reuse_train_perturbation": self.reuse_train_perturbation,
            "emit_embeddings": self.emit_embeddings,
            "output": support::path_str(&self.output),
        });
        support::print_header(Some(self.seed), &config);

        if !record_clean && !record_adversarial {
            return Err(Error::invalid("nothing to record; --record is empty"));
        }
        let clean_path = support::with_suffix(&self.output, ".clean.traces.jsonl");
        let adv_path = support::with_suffix(&self.output, ".adversarial.traces.jsonl");
        let log_path = support::with_suffix(&self.output, ".log.json");
        let emb_path = support::with_suffix(&self.output, ".embeddings.jsonl");
        if record_clean {
            support::guard_output(&clean_path, self.force)?;
        }
        if record_adversarial {
            support::guard_output(&adv_path, self.force)?;
        }
        support::guard_output(&log_path, self.force)?;
        if self.emit_embeddings {
            support::guard_output(&emb_path, self.force)?;
        }

        // Separate seed streams so e.g. adding epochs never reshuffles the
        // dataset itself.
        let data_seed = self.seed;
        let model_seed = self.seed.wrapping_add(1);
        let train_seed = self.seed.wrapping_add(2);
        let eval_seed = self.seed.wrapping_add(3);

        let data = make_blobs(
            self.samples_per_class,
            self.classes,
            self.dim,
            self.separation,
            data_seed,
        )?;
        let mut sizes = Vec::with_capacity(self.hidden.len() + 2);
        sizes.push(self.dim);
        sizes.extend_from_slice(&self.hidden);
        sizes.push(self.classes);
        let model = ToyModel::new(&sizes, model_seed)?;

        let cfg = TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            loss,
            seed: train_seed,
            record_clean,
            record_adversarial,
            reuse_train_perturbation: self.reuse_train_perturbation,
        };
        let out = train(model, &data, &cfg, needs_attack.then_some(&attack))?;

        if record_clean {
            write_traces(&out.clean_traces, &clean_path)?;
            println!(
                "wrote {} ({} traces)",
                clean_path.display(),
                out.clean_traces.len()
            );
        }
        if record_adversarial {
            write_traces(&out.adversarial_traces, &adv_path)?;
            println!(
                "wrote {} ({} traces)",
                adv_path.display(),
                out.adversarial_traces.len()
            );
        }
        if self.emit_embeddings {
            let mut set = EmbeddingSet::new(data.dim);
            for i in 0..data.len() {
                set.push(data.ids[i].clone(), &data.inputs[i], Some(data.labels[i]))?;
            }
            write_embeddings(&set, &emb_path)?;
            println!("wrote {} ({} rows)", emb_path.display(), set.len());
        }

        let (clean_acc, robust_acc) = evaluate(
            &out.model,
            &data,
            needs_attack.then_some(&attack),
            eval_seed,
        )?;
        let log_doc = json!({
            "config": config,
            "epochs": out.log.epochs,
            "final": {
                "clean_accuracy": clean_acc,
                "robust_accuracy": needs_attack.then_some(robust_acc),
            },
        });
        let body =
            serde_json::to_string_pretty(&log_doc).map_err(|e| Error::invalid(e.to_string()))?;
        std::fs::write(&log_path, body + "\n").map_err(|e| Error::io(&log_path, e))?;
        println!(
            "wrote {} ({} epochs)",
            log_path.display(),
            out.log.epochs.len()
        );
        Ok(())
    }
}
