//! Mini-batch gradient descent with per-epoch certainty recording.
//!
//! Single-threaded on purpose: gradient accumulation order is fixed, so a
//! (seed, config) pair reproduces traces bit for bit.

use prunekit_core::rng::PortableRng;
use prunekit_core::types::{CertaintyTrace, Variant};
use prunekit_core::{Error, Result};
use serde::Serialize;

use crate::attack::{pgd_attack, pgd_attack_from, AttackConfig, AttackObjective};
use crate::data::Dataset;
use crate::loss::{loss_and_grads, Gradients, LossConfig, LossKind};
use crate::model::ToyModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub loss: LossConfig,
    pub seed: u64,
    pub record_clean: bool,
    pub record_adversarial: bool,
    /// Record each sample's adversarial certainty on the perturbation built
    /// during its training step instead of running a fresh epoch-end attack.
    pub reuse_train_perturbation: bool,
}

impl TrainConfig {
    pub fn new(epochs: usize, loss: LossConfig) -> Self {
        TrainConfig {
            epochs,
            batch_size: 32,
            learning_rate: 0.1,
            momentum: 0.9,
            loss,
            seed: 0,
            record_clean: true,
            record_adversarial: loss.needs_adversarial(),
            reuse_train_perturbation: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epoch count must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::invalid(format!(
                "learning rate {} must be finite and positive",
                self.learning_rate
            )));
        }
        if !self.momentum.is_finite() || !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        self.loss.validate()?;
        if self.reuse_train_perturbation && !self.loss.needs_adversarial() {
            return Err(Error::invalid(
                "no training perturbations exist to reuse under a clean objective",
            ));
        }
        Ok(())
    }
}

/// One epoch of the training log; `epoch` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub clean_accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: ToyModel,
    pub clean_traces: Vec<CertaintyTrace>,
    pub adversarial_traces: Vec<CertaintyTrace>,
    pub log: TrainLog,
}

fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate().skip(1) {
        if v > p[best] {
            best = i;
        }
    }
    best
}

fn check_compatible(model: &ToyModel, data: &Dataset) -> Result<()> {
    model.validate()?;
    data.validate()?;
    if data.is_empty() {
        return Err(Error::invalid("empty dataset"));
    }
    if model.input_dim() != data.dim {
        return Err(Error::invalid(format!(
            "model expects {} inputs, dataset provides {}",
            model.input_dim(),
            data.dim
        )));
    }
    if model.classes() != data.classes {
        return Err(Error::invalid(format!(
            "model has {} classes, dataset has {}",
            model.classes(),
            data.classes
        )));
    }
    Ok(())
}

/// The attack objective that matches the training objective: trades attacks
/// the KL term from the clean prediction, everything else attacks CE.
fn training_attack(
    model: &ToyModel,
    kind: LossKind,
    x: &[f64],
    y: u32,
    cfg: &AttackConfig,
    rng: &mut PortableRng,
) -> Result<Vec<f64>> {
    match kind {
        LossKind::Trades => {
            let reference = model.forward(x)?;
            pgd_attack(
                model,
                x,
                AttackObjective::KlFromReference {
                    reference: &reference,
                },
                cfg,
                rng,
            )
        }
        _ => pgd_attack(
            model,
            x,
            AttackObjective::CrossEntropy { label: y },
            cfg,
            rng,
        ),
    }
}

/// Trains the model and records one certainty per (sample, epoch) for each
/// requested variant.
pub fn train(
    mut model: ToyModel,
    data: &Dataset,
    cfg: &TrainConfig,
    attack: Option<&AttackConfig>,
) -> Result<TrainOutput> {
    cfg.validate()?;
    check_compatible(&model, data)?;
    let wants_attack = cfg.loss.needs_adversarial() || cfg.record_adversarial;
    let attack = match (wants_attack, attack) {
        (true, None) => {
            return Err(Error::invalid(
                "adversarial objective or recording requires an attack config",
            ))
        }
        (_, Some(a)) => {
            a.validate()?;
            Some(a)
        }
        (false, None) => None,
    };

    let n = data.len();
    let mut rng = PortableRng::seed_from_u64(cfg.seed);
    let mut velocity = Gradients::zeros_like(&model);
    let mut clean_certs: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.epochs); n];
    let mut adv_certs: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.epochs); n];
    let mut last_adv: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut log = TrainLog::default();

    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        rng.partial_shuffle(&mut order, n);
        let mut loss_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<Vec<f64>> = batch.iter().map(|&i| data.inputs[i].clone()).collect();
            let ys: Vec<u32> = batch.iter().map(|&i| data.labels[i]).collect();
            let adv_xs: Option<Vec<Vec<f64>>> = if cfg.loss.needs_adversarial() {
                let a = attack.expect("checked above");
                let mut advs = Vec::with_capacity(batch.len());
                for (&i, (x, &y)) in batch.iter().zip(xs.iter().zip(&ys)) {
                    let adv = training_attack(&model, cfg.loss.kind, x, y, a, &mut rng)
                        .map_err(|e| Error::invalid(format!("epoch {epoch}: {e}")))?;
                    if cfg.reuse_train_perturbation {
                        last_adv[i] = Some(adv.clone());
                    }
                    advs.push(adv);
                }
                Some(advs)
            } else {
                None
            };
            let (loss, grads) = loss_and_grads(&model, &xs, &ys, adv_xs.as_deref(), &cfg.loss)
                .map_err(|e| Error::invalid(format!("epoch {epoch}: {e}")))?;
            if !loss.is_finite() {
                return Err(Error::invalid(format!(
                    "training diverged at epoch {epoch}: loss = {loss}"
                )));
            }
            loss_sum += loss * batch.len() as f64;

            for l in 0..model.layer_count() {
                for (v, &g) in velocity.weights[l].iter_mut().zip(&grads.weights[l]) {
                    *v = cfg.momentum * *v + g;
                }
                for (v, &g) in velocity.biases[l].iter_mut().zip(&grads.biases[l]) {
                    *v = cfg.momentum * *v + g;
                }
                for (w, &v) in model.weights[l].iter_mut().zip(&velocity.weights[l]) {
                    *w -= cfg.learning_rate * v;
                }
                for (b, &v) in model.biases[l].iter_mut().zip(&velocity.biases[l]) {
                    *b -= cfg.learning_rate * v;
                }
            }
        }

        let mut correct = 0usize;
        for (i, trace) in clean_certs.iter_mut().enumerate() {
            let p = model.forward(&data.inputs[i])?;
            let y = data.labels[i] as usize;
            if argmax(&p) == y {
                correct += 1;
            }
            if cfg.record_clean {
                trace.push(p[y]);
            }
        }
        if cfg.record_adversarial {
            let a = attack.expect("checked above");
            for i in 0..n {
                let x = &data.inputs[i];
                let y = data.labels[i];
                let adv = if cfg.reuse_train_perturbation {
                    last_adv[i]
                        .clone()
                        .expect("every sample is attacked once per epoch")
                } else {
                    training_attack(&model, cfg.loss.kind, x, y, a, &mut rng)
                        .map_err(|e| Error::invalid(format!("epoch {epoch}: {e}")))?
                };
                let p = model.forward(&adv)?;
                adv_certs[i].push(p[y as usize]);
            }
        }
        log.epochs.push(EpochLog {
            epoch,
            mean_loss: loss_sum / n as f64,
            clean_accuracy: correct as f64 / n as f64,
        });
    }

    let build = |certs: Vec<Vec<f64>>, variant: Variant| -> Vec<CertaintyTrace> {
        data.ids
            .iter()
            .zip(&data.labels)
            .zip(certs)
            .map(|((id, &label), certainties)| CertaintyTrace {
                id: id.clone(),
                label,
                variant,
                certainties,
            })
            .collect()
    };
    let clean_traces = if cfg.record_clean {
        build(clean_certs, Variant::Clean)
    } else {
        Vec::new()
    };
    let adversarial_traces = if cfg.record_adversarial {
        build(adv_certs, Variant::Adversarial)
    } else {
        Vec::new()
    };
    Ok(TrainOutput {
        model,
        clean_traces,
        adversarial_traces,
        log,
    })
}

/// Clean and robust accuracy. Without an attack config the two are equal by
/// definition.
pub fn evaluate(
    model: &ToyModel,
    data: &Dataset,
    attack: Option<&AttackConfig>,
    seed: u64,
) -> Result<(f64, f64)> {
    check_compatible(model, data)?;
    let mut rng = PortableRng::seed_from_u64(seed);
    let mut clean = 0usize;
    let mut robust = 0usize;
    for i in 0..data.len() {
        let x = &data.inputs[i];
        let y = data.labels[i];
        if argmax(&model.forward(x)?) == y as usize {
            clean += 1;
        }
        match attack {
            Some(a) => {
                let adv = pgd_attack(
                    model,
                    x,
                    AttackObjective::CrossEntropy { label: y },
                    a,
                    &mut rng,
                )?;
                if argmax(&model.forward(&adv)?) == y as usize {
                    robust += 1;
                }
            }
            None => {
                if argmax(&model.forward(x)?) == y as usize {
                    robust += 1;
                }
            }
        }
    }
    let n = data.len() as f64;
    Ok((clean as f64 / n, robust as f64 / n))
}

/// Robust accuracy under a growing sequence of budgets, with each attack
/// started from the previous budget's adversarial point. A sample that falls
/// stays fallen (its adversarial point remains feasible in every larger
/// ball), so the returned accuracies never increase.
pub fn evaluate_chain(
    model: &ToyModel,
    data: &Dataset,
    attack: &AttackConfig,
    epsilons: &[f64],
    seed: u64,
) -> Result<Vec<f64>> {
    check_compatible(model, data)?;
    attack.validate()?;
    if epsilons.is_empty() {
        return Err(Error::invalid("empty epsilon chain"));
    }
    for pair in epsilons.windows(2) {
        if pair[0] > pair[1] {
            return Err(Error::invalid(format!(
                "epsilon chain must be non-decreasing: {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if !epsilons[0].is_finite() || epsilons[0] < 0.0 {
        return Err(Error::invalid(format!(
            "epsilon {} must be finite and non-negative",
            epsilons[0]
        )));
    }
    let mut rng = PortableRng::seed_from_u64(seed);
    let mut surviving = vec![0usize; epsilons.len()];
    for i in 0..data.len() {
        let x = &data.inputs[i];
        let y = data.labels[i];
        let mut current = x.clone();
        let mut alive = true;
        for (j, &eps) in epsilons.iter().enumerate() {
            if alive {
                // chaining needs the warm start, so the random start is off
                let cfg = AttackConfig {
                    epsilon: eps,
                    random_start: false,
                    ..*attack
                };
                current = pgd_attack_from(
                    model,
                    x,
                    &current,
                    AttackObjective::CrossEntropy { label: y },
                    &cfg,
                    &mut rng,
                )?;
                if argmax(&model.forward(&current)?) != y as usize {
                    alive = false;
                }
            }
            if alive {
                surviving[j] += 1;
            }
        }
    }
    Ok(surviving
        .into_iter()
        .map(|s| s as f64 / data.len() as f64)
        .collect())
}
