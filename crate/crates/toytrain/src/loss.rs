//! Training objectives and exact analytic gradients.
//!
//! Three modes: plain cross-entropy on clean inputs, cross-entropy on
//! adversarial inputs, and the TRADES combination
//! CE(f(x), y) + beta * KL(f(x) || f(x_adv)).

use prunekit_core::{Error, Result};

use crate::model::{Forward, ToyModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    StandardCe,
    AdversarialCe,
    Trades,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub kind: LossKind,
    /// Weight of the KL term in trades mode; ignored otherwise.
    pub trades_beta: f64,
    /// Mass moved from the true class to the uniform distribution in the
    /// cross-entropy target.
    pub label_smoothing: f64,
}

impl LossConfig {
    pub fn standard() -> Self {
        LossConfig {
            kind: LossKind::StandardCe,
            trades_beta: 0.0,
            label_smoothing: 0.0,
        }
    }

    pub fn adversarial() -> Self {
        LossConfig {
            kind: LossKind::AdversarialCe,
            ..LossConfig::standard()
        }
    }

    pub fn trades(beta: f64) -> Self {
        LossConfig {
            kind: LossKind::Trades,
            trades_beta: beta,
            ..LossConfig::standard()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.trades_beta.is_finite() || self.trades_beta < 0.0 {
            return Err(Error::invalid(format!(
                "trades beta {} must be finite and non-negative",
                self.trades_beta
            )));
        }
        if !self.label_smoothing.is_finite() || !(0.0..1.0).contains(&self.label_smoothing) {
            return Err(Error::invalid(format!(
                "label smoothing {} outside [0, 1)",
                self.label_smoothing
            )));
        }
        Ok(())
    }

    /// Whether this objective consumes adversarial twins of the batch.
    pub fn needs_adversarial(&self) -> bool {
        matches!(self.kind, LossKind::AdversarialCe | LossKind::Trades)
    }
}

/// Parameter gradients, shaped exactly like the model they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &ToyModel) -> Self {
        Gradients {
            weights: model.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: model.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for v in self.weights.iter_mut().chain(self.biases.iter_mut()) {
            for g in v {
                *g *= c;
            }
        }
    }
}

fn smoothed_target(classes: usize, label: u32, smoothing: f64) -> Vec<f64> {
    let mut t = vec![smoothing / classes as f64; classes];
    t[label as usize] += 1.0 - smoothing;
    t
}

fn check_label(classes: usize, label: u32) -> Result<()> {
    if (label as usize) >= classes {
        return Err(Error::invalid(format!(
            "label {label} outside the {classes} model classes"
        )));
    }
    Ok(())
}

/// Cross-entropy against a (possibly smoothed) one-hot target.
pub fn cross_entropy(probs: &[f64], label: u32, smoothing: f64) -> Result<f64> {
    check_label(probs.len(), label)?;
    let t = smoothed_target(probs.len(), label, smoothing);
    let mut loss = 0.0;
    for (ti, &pi) in t.iter().zip(probs) {
        if *ti > 0.0 {
            loss -= ti * pi.ln();
        }
    }
    Ok(loss)
}

/// KL(p || q) = sum p_i (ln p_i - ln q_i); zero-probability components of p
/// contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(format!(
            "distributions of different sizes: {} vs {}",
            p.len(),
            q.len()
        )));
    }
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            kl += pi * (pi.ln() - qi.ln());
        }
    }
    Ok(kl)
}

/// Pushes an output-layer delta (dL/d logits) back through the network,
/// accumulating parameter gradients, and returns dL/d input.
fn backprop(model: &ToyModel, fwd: &Forward, out_delta: &[f64], grads: &mut Gradients) -> Vec<f64> {
    let mut delta = out_delta.to_vec();
    for l in (0..model.layer_count()).rev() {
        let (fan_in, fan_out) = (model.sizes[l], model.sizes[l + 1]);
        let prev = &fwd.activations[l];
        for (i, &d) in delta.iter().enumerate().take(fan_out) {
            let row = &mut grads.weights[l][i * fan_in..(i + 1) * fan_in];
            for (gj, &aj) in row.iter_mut().zip(prev) {
                *gj += d * aj;
            }
            grads.biases[l][i] += d;
        }
        let w = &model.weights[l];
        let mut upstream = vec![0.0; fan_in];
        for i in 0..fan_out {
            let row = &w[i * fan_in..(i + 1) * fan_in];
            for (uj, &wj) in upstream.iter_mut().zip(row) {
                *uj += wj * delta[i];
            }
        }
        if l == 0 {
            return upstream;
        }
        // tanh'(z) = 1 - tanh(z)^2, and prev already holds tanh(z)
        delta = upstream
            .into_iter()
            .zip(prev)
            .map(|(u, &a)| u * (1.0 - a * a))
            .collect();
    }
    unreachable!("models always have at least one layer");
}

/// Per-sample loss plus parameter-gradient accumulation. Returns the loss.
fn sample_loss(
    model: &ToyModel,
    x: &[f64],
    adv: Option<&[f64]>,
    y: u32,
    cfg: &LossConfig,
    grads: &mut Gradients,
) -> Result<f64> {
    check_label(model.classes(), y)?;
    let t = smoothed_target(model.classes(), y, cfg.label_smoothing);
    match cfg.kind {
        LossKind::StandardCe | LossKind::AdversarialCe => {
            let input = if cfg.kind == LossKind::StandardCe {
                x
            } else {
                adv.expect("adversarial batch checked by loss_and_grads")
            };
            let fwd = model.forward_full(input)?;
            let delta: Vec<f64> = fwd.probs.iter().zip(&t).map(|(&p, &ti)| p - ti).collect();
            backprop(model, &fwd, &delta, grads);
            cross_entropy(&fwd.probs, y, cfg.label_smoothing)
        }
        LossKind::Trades => {
            let adv = adv.expect("adversarial batch checked by loss_and_grads");
            let clean = model.forward_full(x)?;
            let ce = cross_entropy(&clean.probs, y, cfg.label_smoothing)?;
            let beta = cfg.trades_beta;
            if beta == 0.0 {
                // the KL term vanishes; skipping it keeps the degenerate
                // case bitwise identical to plain cross-entropy
                let delta: Vec<f64> = clean.probs.iter().zip(&t).map(|(&p, &ti)| p - ti).collect();
                backprop(model, &clean, &delta, grads);
                return Ok(ce);
            }
            let advf = model.forward_full(adv)?;
            let p = &clean.probs;
            let q = &advf.probs;
            let kl = kl_divergence(p, q)?;
            // d(CE + beta*KL)/d clean logits:
            //   (p - t) + beta * p .* (ln p - ln q - KL)
            let clean_delta: Vec<f64> = (0..p.len())
                .map(|i| {
                    let ce_part = p[i] - t[i];
                    let kl_part = if p[i] > 0.0 {
                        p[i] * (p[i].ln() - q[i].ln() - kl)
                    } else {
                        0.0
                    };
                    ce_part + beta * kl_part
                })
                .collect();
            backprop(model, &clean, &clean_delta, grads);
            // d(beta*KL)/d adversarial logits: beta * (q - p)
            let adv_delta: Vec<f64> = q.iter().zip(p).map(|(&qi, &pi)| beta * (qi - pi)).collect();
            backprop(model, &advf, &adv_delta, grads);
            Ok(ce + beta * kl)
        }
    }
}

/// Mean loss over the batch and the exact gradient of that mean. Samples are
/// processed in order, so the result is deterministic.
pub fn loss_and_grads(
    model: &ToyModel,
    xs: &[Vec<f64>],
    ys: &[u32],
    adv: Option<&[Vec<f64>]>,
    cfg: &LossConfig,
) -> Result<(f64, Gradients)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "{} inputs but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if cfg.needs_adversarial() {
        match adv {
            None => {
                return Err(Error::invalid(
                    "this objective needs adversarial inputs for the batch",
                ))
            }
            Some(a) if a.len() != xs.len() => {
                return Err(Error::invalid(format!(
                    "{} adversarial inputs for a batch of {}",
                    a.len(),
                    xs.len()
                )))
            }
            _ => {}
        }
    }
    let mut grads = Gradients::zeros_like(model);
    let mut total = 0.0;
    for i in 0..xs.len() {
        let adv_i = adv.map(|a| a[i].as_slice());
        let loss = sample_loss(model, &xs[i], adv_i, ys[i], cfg, &mut grads)?;
        if !loss.is_finite() {
            return Err(Error::invalid(format!(
                "batch sample {i}: non-finite loss {loss}"
            )));
        }
        total += loss;
    }
    let n = xs.len() as f64;
    grads.scale(1.0 / n);
    Ok((total / n, grads))
}

/// Gradient of CE(f(x), y) with respect to the input.
pub fn input_grad(model: &ToyModel, x: &[f64], label: u32, smoothing: f64) -> Result<Vec<f64>> {
    check_label(model.classes(), label)?;
    let fwd = model.forward_full(x)?;
    let t = smoothed_target(model.classes(), label, smoothing);
    let delta: Vec<f64> = fwd.probs.iter().zip(&t).map(|(&p, &ti)| p - ti).collect();
    let mut scratch = Gradients::zeros_like(model);
    Ok(backprop(model, &fwd, &delta, &mut scratch))
}

/// Gradient of KL(reference || f(x)) with respect to the input, holding the
/// reference distribution fixed. Drives the trades inner maximization.
pub fn kl_input_grad(model: &ToyModel, reference: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if reference.len() != model.classes() {
        return Err(Error::invalid(format!(
            "reference has {} components, model has {} classes",
            reference.len(),
            model.classes()
        )));
    }
    let fwd = model.forward_full(x)?;
    // d KL(ref || q) / d logits = q - ref
    let delta: Vec<f64> = fwd
        .probs
        .iter()
        .zip(reference)
        .map(|(&qi, &ri)| qi - ri)
        .collect();
    let mut scratch = Gradients::zeros_like(model);
    Ok(backprop(model, &fwd, &delta, &mut scratch))
}
