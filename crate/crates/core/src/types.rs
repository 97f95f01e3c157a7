//! Domain types shared by every stage of the pipeline.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which input the certainties were recorded on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Clean,
    Adversarial,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Clean => "clean",
            Variant::Adversarial => "adversarial",
        })
    }
}

/// One sample's predicted certainty for its true class, per training epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyTrace {
    pub id: String,
    pub label: u32,
    pub variant: Variant,
    pub certainties: Vec<f64>,
}

impl CertaintyTrace {
    /// Number of recorded epochs (K).
    pub fn epochs(&self) -> usize {
        self.certainties.len()
    }

    /// File-format invariants: non-empty id, K >= 1, every certainty finite
    /// and inside [0, 1].
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::invalid("trace with empty sample id"));
        }
        if self.certainties.is_empty() {
            return Err(Error::invalid(format!(
                "trace '{}': no certainties recorded",
                self.id
            )));
        }
        for (i, &c) in self.certainties.iter().enumerate() {
            if !c.is_finite() || !(0.0..=1.0).contains(&c) {
                return Err(Error::invalid(format!(
                    "trace '{}': certainty[{i}] = {c} outside [0, 1]",
                    self.id
                )));
            }
        }
        Ok(())
    }
}

/// id -> label map over a set of traces.
pub fn labels_from_traces(traces: &[CertaintyTrace]) -> BTreeMap<String, u32> {
    traces.iter().map(|t| (t.id.clone(), t.label)).collect()
}

/// Importance metric that produced a score table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "DU")]
    Du,
    #[serde(rename = "FP")]
    Fp,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Du => "DU",
            Metric::Fp => "FP",
        })
    }
}

/// How the scores in a table were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Computed,
    Extrapolated,
    Random,
}

/// Sample-id -> importance score mapping plus the parameters that defined it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub metric: Metric,
    pub params: serde_json::Value,
    pub provenance: Provenance,
    pub entries: BTreeMap<String, f64>,
}

impl ScoreTable {
    pub fn new(metric: Metric, params: serde_json::Value, provenance: Provenance) -> Self {
        ScoreTable {
            metric,
            params,
            provenance,
            entries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest and largest score, if any entries exist.
    pub fn min_max(&self) -> Option<(f64, f64)> {
        let mut iter = self.entries.values();
        let first = *iter.next()?;
        let mut min = first;
        let mut max = first;
        for &v in iter {
            min = min.min(v);
            max = max.max(v);
        }
        Some((min, max))
    }

    /// Score invariants: finite, non-negative, and for windowed dynamic
    /// uncertainty no larger than the per-window bound 0.5 * sqrt(J/(J-1)).
    /// The bound does not apply when the fixed K-J denominator is in use,
    /// since that divides the window sum by one fewer window than averaged.
    pub fn validate(&self) -> Result<()> {
        for (id, &s) in &self.entries {
            if !s.is_finite() || s < 0.0 {
                return Err(Error::invalid(format!(
                    "score for '{id}' is {s}; scores must be finite and non-negative"
                )));
            }
        }
        if self.metric == Metric::Du {
            let paper_denominator = self
                .params
                .get("paper_denominator")
                .and_then(|v| v.as_bool())
                .unwrap_or(false);
            let window = self.params.get("window").and_then(|v| v.as_u64());
            if let (false, Some(j)) = (paper_denominator, window) {
                if j >= 2 {
                    let j = j as f64;
                    // ulp slack: the bound itself is computed in floats
                    let bound = 0.5 * (j / (j - 1.0)).sqrt() * (1.0 + 1e-9);
                    for (id, &s) in &self.entries {
                        if s > bound {
                            return Err(Error::invalid(format!(
                                "DU score for '{id}' is {s}, above the window-{j} bound {bound}"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Sample-aligned matrix of fixed-width feature vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    pub ids: Vec<String>,
    pub dim: usize,
    /// Row-major n x dim values.
    pub vectors: Vec<f64>,
    /// Per-row class label; `None` = unlabeled.
    pub labels: Vec<Option<u32>>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        EmbeddingSet {
            ids: Vec::new(),
            dim,
            vectors: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(
        &mut self,
        id: impl Into<String>,
        vector: &[f64],
        label: Option<u32>,
    ) -> Result<()> {
        if vector.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector has {} values, set dimension is {}",
                vector.len(),
                self.dim
            )));
        }
        self.ids.push(id.into());
        self.vectors.extend_from_slice(vector);
        self.labels.push(label);
        Ok(())
    }

    /// Structural invariants: dim >= 1, aligned lengths, unique non-empty
    /// ids, finite values.
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("embedding dimension must be at least 1"));
        }
        if self.vectors.len() != self.ids.len() * self.dim {
            return Err(Error::invalid(format!(
                "{} ids with dimension {} need {} values, found {}",
                self.ids.len(),
                self.dim,
                self.ids.len() * self.dim,
                self.vectors.len()
            )));
        }
        if self.labels.len() != self.ids.len() {
            return Err(Error::invalid(format!(
                "{} ids but {} labels",
                self.ids.len(),
                self.labels.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &self.ids {
            if id.is_empty() {
                return Err(Error::invalid("embedding row with empty id"));
            }
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!("duplicate embedding id '{id}'")));
            }
        }
        for (i, &v) in self.vectors.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite value {v} in row '{}' (component {})",
                    self.ids[i / self.dim],
                    i % self.dim
                )));
            }
        }
        Ok(())
    }

    /// id -> label map over the labeled rows.
    pub fn label_map(&self) -> BTreeMap<String, u32> {
        self.ids
            .iter()
            .zip(&self.labels)
            .filter_map(|(id, l)| l.map(|l| (id.clone(), l)))
            .collect()
    }
}

/// Distance used for neighbor search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    Euclidean,
    Cosine,
}

impl fmt::Display for DistanceMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMetric::Euclidean => "euclidean",
            DistanceMetric::Cosine => "cosine",
        })
    }
}

/// Neighbor count and distance metric for score extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnnConfig {
    pub k: usize,
    pub metric: DistanceMetric,
}

impl KnnConfig {
    pub fn new(k: usize, metric: DistanceMetric) -> Self {
        KnnConfig { k, metric }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(())
    }
}

/// Whether pruning discards the low or the high end of the score ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "keep-high")]
    KeepHigh,
    #[serde(rename = "keep-low")]
    KeepLow,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::KeepHigh => "keep-high",
            Direction::KeepLow => "keep-low",
        })
    }
}

/// Record of how a manifest was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrunePolicy {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    pub balanced: bool,
    /// "DU", "FP", or "random".
    pub metric: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Kept/removed partition of a dataset under a pruning policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneManifest {
    pub kept: Vec<String>,
    pub removed: Vec<String>,
    pub policy: PrunePolicy,
}

impl PruneManifest {
    pub fn universe_size(&self) -> usize {
        self.kept.len() + self.removed.len()
    }

    /// Invariants: kept and removed disjoint with no duplicates, and the
    /// removed count matching the recorded budget.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for id in self.kept.iter().chain(&self.removed) {
            if !seen.insert(id.as_str()) {
                return Err(Error::invalid(format!(
                    "id '{id}' appears twice in the manifest"
                )));
            }
        }
        if let Some(c) = self.policy.count {
            if self.removed.len() != c {
                return Err(Error::invalid(format!(
                    "policy removes {c} but manifest removed {}",
                    self.removed.len()
                )));
            }
        } else if let Some(f) = self.policy.fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::invalid(format!(
                    "policy fraction {f} outside [0, 1)"
                )));
            }
            let expect = (f * self.universe_size() as f64).floor() as usize;
            if self.removed.len() != expect {
                return Err(Error::invalid(format!(
                    "fraction {f} of {} samples should remove {expect}, manifest removed {}",
                    self.universe_size(),
                    self.removed.len()
                )));
            }
        }
        Ok(())
    }
}

/// Per-sample frequency-band magnitudes next to the sample's DU score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub sample_id: String,
    pub du_score: f64,
    pub band_low: f64,
    pub band_high: f64,
}
