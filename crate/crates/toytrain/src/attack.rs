//! Projected gradient descent attacks in the l-infinity and l2 threat
//! models. Every emitted point satisfies the norm bound around the original
//! input and lies inside the [0, 1] data domain.

use prunekit_core::rng::PortableRng;
use prunekit_core::{Error, Result};

use crate::loss::{input_grad, kl_input_grad};
use crate::model::ToyModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    Linf,
    L2,
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Norm::Linf => "linf",
            Norm::L2 => "l2",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackConfig {
    pub norm: Norm,
    pub epsilon: f64,
    pub step_size: f64,
    pub iterations: usize,
    pub random_start: bool,
}

impl AttackConfig {
    /// The customary l-infinity budget for [0,1]-scaled image data.
    pub fn preset_linf() -> Self {
        AttackConfig {
            norm: Norm::Linf,
            epsilon: 8.0 / 255.0,
            step_size: 2.0 / 255.0,
            iterations: 10,
            random_start: true,
        }
    }

    /// The matching l2 budget.
    pub fn preset_l2() -> Self {
        AttackConfig {
            norm: Norm::L2,
            epsilon: 128.0 / 255.0,
            step_size: 32.0 / 255.0,
            iterations: 10,
            random_start: true,
        }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        AttackConfig { epsilon, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        // epsilon = 0 is allowed: it degenerates to the identity attack,
        // which downstream uses as the "no perturbation" control
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::invalid(format!(
                "epsilon {} must be finite and non-negative",
                self.epsilon
            )));
        }
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::invalid(format!(
                "step size {} must be finite and positive",
                self.step_size
            )));
        }
        if self.iterations == 0 || self.iterations > 1000 {
            return Err(Error::invalid(format!(
                "iteration count {} outside 1..=1000",
                self.iterations
            )));
        }
        Ok(())
    }
}

/// What the attack ascends on.
#[derive(Debug, Clone, Copy)]
pub enum AttackObjective<'a> {
    /// Maximize CE(f(x_adv), label): the standard untargeted attack.
    CrossEntropy { label: u32 },
    /// Maximize KL(reference || f(x_adv)): the trades inner problem, with
    /// the clean prediction as the fixed reference.
    KlFromReference { reference: &'a [f64] },
}

fn objective_grad(model: &ToyModel, objective: &AttackObjective, x: &[f64]) -> Result<Vec<f64>> {
    let g = match objective {
        AttackObjective::CrossEntropy { label } => input_grad(model, x, *label, 0.0)?,
        AttackObjective::KlFromReference { reference } => kl_input_grad(model, reference, x)?,
    };
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "attack gradient[{i}] is not finite"
        )));
    }
    Ok(g)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

/// Ball projection around `origin`, then domain clipping. Clipping moves
/// coordinates toward the origin (which itself lies in [0,1]), so the norm
/// bound survives it.
fn project(origin: &[f64], point: &mut [f64], norm: Norm, eps: f64) {
    match norm {
        Norm::Linf => {
            for (p, &o) in point.iter_mut().zip(origin) {
                *p = p.clamp(o - eps, o + eps);
            }
        }
        Norm::L2 => {
            let delta: Vec<f64> = point.iter().zip(origin).map(|(&p, &o)| p - o).collect();
            let n = l2_norm(&delta);
            if n > eps {
                let scale = eps / n;
                for ((p, &o), d) in point.iter_mut().zip(origin).zip(delta) {
                    *p = o + scale * d;
                }
            }
        }
    }
    for p in point.iter_mut() {
        *p = p.clamp(0.0, 1.0);
    }
}

fn random_start(origin: &[f64], norm: Norm, eps: f64, rng: &mut PortableRng) -> Vec<f64> {
    let mut point: Vec<f64> = match norm {
        Norm::Linf => origin
            .iter()
            .map(|&o| o + rng.range_f64(-eps, eps))
            .collect(),
        Norm::L2 => {
            let dir: Vec<f64> = origin.iter().map(|_| rng.standard_normal()).collect();
            let n = l2_norm(&dir);
            // radius ~ eps * u^(1/d) makes the start uniform over the ball
            let radius = eps * rng.unit_f64().powf(1.0 / origin.len() as f64);
            if n == 0.0 {
                origin.to_vec()
            } else {
                origin
                    .iter()
                    .zip(&dir)
                    .map(|(&o, &d)| o + radius * d / n)
                    .collect()
            }
        }
    };
    project(origin, &mut point, norm, eps);
    point
}

/// Runs the attack from a caller-chosen feasible start. The ball is always
/// centered on `origin`; passing a previous attack's output as `start`
/// chains attacks across growing budgets.
pub fn pgd_attack_from(
    model: &ToyModel,
    origin: &[f64],
    start: &[f64],
    objective: AttackObjective,
    cfg: &AttackConfig,
    rng: &mut PortableRng,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    model.validate()?;
    if origin.len() != model.input_dim() || start.len() != origin.len() {
        return Err(Error::invalid(format!(
            "attack on {} values, model expects {}",
            origin.len(),
            model.input_dim()
        )));
    }
    let mut point = if cfg.random_start {
        random_start(origin, cfg.norm, cfg.epsilon, rng)
    } else {
        let mut p = start.to_vec();
        project(origin, &mut p, cfg.norm, cfg.epsilon);
        p
    };
    for _ in 0..cfg.iterations {
        let g = objective_grad(model, &objective, &point)?;
        match cfg.norm {
            Norm::Linf => {
                for (p, &gi) in point.iter_mut().zip(&g) {
                    // sign(0) = 0: flat coordinates stay put
                    let s = if gi > 0.0 {
                        1.0
                    } else if gi < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    *p += cfg.step_size * s;
                }
            }
            Norm::L2 => {
                let n = l2_norm(&g);
                if n == 0.0 {
                    // nothing to ascend; skipping beats dividing by zero
                    continue;
                }
                for (p, &gi) in point.iter_mut().zip(&g) {
                    *p += cfg.step_size * gi / n;
                }
            }
        }
        project(origin, &mut point, cfg.norm, cfg.epsilon);
    }
    Ok(point)
}

/// The standard attack: starts at the input (or a random point in the ball).
pub fn pgd_attack(
    model: &ToyModel,
    x: &[f64],
    objective: AttackObjective,
    cfg: &AttackConfig,
    rng: &mut PortableRng,
) -> Result<Vec<f64>> {
    pgd_attack_from(model, x, x, objective, cfg, rng)
}

/// Norm of the perturbation, in the attack's own norm.
pub fn perturbation_norm(origin: &[f64], point: &[f64], norm: Norm) -> f64 {
    match norm {
        Norm::Linf => origin
            .iter()
            .zip(point)
            .map(|(&o, &p)| (p - o).abs())
            .fold(0.0, f64::max),
        Norm::L2 => l2_norm(
            &origin
                .iter()
                .zip(point)
                .map(|(&o, &p)| p - o)
                .collect::<Vec<f64>>(),
        ),
    }
}
