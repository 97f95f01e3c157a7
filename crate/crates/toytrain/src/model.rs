//! A dense classifier with tanh hidden layers and a softmax head.

use prunekit_core::rng::PortableRng;
use prunekit_core::{Error, Result};

/// Fully-connected network. `sizes` lists layer widths, input first and
/// class count last; weights are row-major `out x in` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub sizes: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// One forward pass with everything backprop needs: `activations[0]` is the
/// input, later entries are post-tanh hidden activations, `probs` the
/// softmax output.
pub struct Forward {
    pub activations: Vec<Vec<f64>>,
    pub probs: Vec<f64>,
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::invalid(
            "a model needs at least an input and an output layer",
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid("zero-width layer"));
    }
    Ok(())
}

impl ToyModel {
    /// Seeded random initialization: weights N(0, 1/fan_in), biases zero.
    pub fn new(sizes: &[usize], seed: u64) -> Result<Self> {
        check_sizes(sizes)?;
        let mut rng = PortableRng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| scale * rng.standard_normal())
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Ok(ToyModel {
            sizes: sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters: predicts the uniform distribution everywhere.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(ToyModel {
            sizes: sizes.to_vec(),
            weights: sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect(),
            biases: sizes.windows(2).map(|w| vec![0.0; w[1]]).collect(),
        })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(&self.sizes)?;
        let layers = self.sizes.len() - 1;
        if self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::invalid("parameter count does not match layer sizes"));
        }
        for (l, w) in self.sizes.windows(2).enumerate() {
            if self.weights[l].len() != w[0] * w[1] || self.biases[l].len() != w[1] {
                return Err(Error::invalid(format!("layer {l} has a malformed shape")));
            }
            if let Some(bad) = self.weights[l]
                .iter()
                .chain(&self.biases[l])
                .find(|v| !v.is_finite())
            {
                return Err(Error::invalid(format!(
                    "layer {l} contains non-finite parameter {bad}"
                )));
            }
        }
        Ok(())
    }

    /// Class probability vector for one input.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_full(x)?.probs)
    }

    pub fn forward_full(&self, x: &[f64]) -> Result<Forward> {
        if x.len() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {} values, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("input[{i}] is not finite")));
        }
        let layers = self.layer_count();
        let mut activations = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        for l in 0..layers {
            let z = self.affine(l, &activations[l]);
            if l + 1 < layers {
                activations.push(z.into_iter().map(f64::tanh).collect());
            } else {
                return Ok(Forward {
                    probs: softmax(&z),
                    activations,
                });
            }
        }
        unreachable!("check_sizes guarantees at least one layer");
    }

    fn affine(&self, layer: usize, input: &[f64]) -> Vec<f64> {
        let (fan_in, fan_out) = (self.sizes[layer], self.sizes[layer + 1]);
        let w = &self.weights[layer];
        (0..fan_out)
            .map(|i| {
                let row = &w[i * fan_in..(i + 1) * fan_in];
                let mut z = self.biases[layer][i];
                for (wj, xj) in row.iter().zip(input) {
                    z += wj * xj;
                }
                z
            })
            .collect()
    }
}

/// Shifted by the max logit before exponentiation, so overflow is impossible
/// and components stay strictly positive.
fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
