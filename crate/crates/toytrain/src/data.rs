//! Synthetic datasets: isotropic Gaussian blobs in the unit cube.

use prunekit_core::rng::PortableRng;
use prunekit_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub dim: usize,
    pub classes: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.ids.len() != self.inputs.len() || self.labels.len() != self.inputs.len() {
            return Err(Error::invalid("dataset columns have different lengths"));
        }
        for (i, x) in self.inputs.iter().enumerate() {
            if x.len() != self.dim {
                return Err(Error::invalid(format!(
                    "sample '{}' has {} values, dataset dimension is {}",
                    self.ids[i],
                    x.len(),
                    self.dim
                )));
            }
        }
        for (i, &y) in self.labels.iter().enumerate() {
            if (y as usize) >= self.classes {
                return Err(Error::invalid(format!(
                    "sample '{}' has label {y}, dataset has {} classes",
                    self.ids[i], self.classes
                )));
            }
        }
        Ok(())
    }
}

/// `classes` isotropic Gaussian clusters clipped to [0,1]^dim.
///
/// Cluster centers are drawn uniformly from [0.2, 0.8]^dim; the standard
/// deviation is the smallest pairwise center distance divided by
/// `separation`, so larger separations give cleaner clusters. Deterministic
/// per seed.
pub fn make_blobs(
    n_per_class: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_per_class == 0 || classes == 0 || dim == 0 {
        return Err(Error::invalid(
            "n_per_class, classes, and dim must all be positive",
        ));
    }
    if !separation.is_finite() || separation <= 0.0 {
        return Err(Error::invalid(format!(
            "separation {separation} must be finite and positive"
        )));
    }
    let mut rng = PortableRng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| rng.range_f64(0.2, 0.8)).collect())
        .collect();
    let mut min_dist = f64::INFINITY;
    for i in 0..classes {
        for j in i + 1..classes {
            let d = centers[i]
                .iter()
                .zip(&centers[j])
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            min_dist = min_dist.min(d);
        }
    }
    // a lone cluster has no pairwise distance; the cube scale stands in
    let base = if classes > 1 { min_dist } else { 1.0 };
    let sigma = base / separation;

    let total = n_per_class * classes;
    let width = (total.max(2) - 1).to_string().len();
    let mut ids = Vec::with_capacity(total);
    let mut inputs = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for (c, center) in centers.iter().enumerate() {
        for i in 0..n_per_class {
            let x: Vec<f64> = center
                .iter()
                .map(|&m| (m + sigma * rng.standard_normal()).clamp(0.0, 1.0))
                .collect();
            ids.push(format!("c{c}-{:0width$}", i, width = width));
            inputs.push(x);
            labels.push(c as u32);
        }
    }
    let data = Dataset {
        ids,
        inputs,
        labels,
        dim,
        classes,
    };
    data.validate()?;
    Ok(data)
}
