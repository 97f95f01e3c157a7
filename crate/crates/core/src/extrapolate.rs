//! Score extrapolation: brute-force exact k-NN over embeddings, the mean
//! baseline it must beat, and the grid search that picks k and the distance
//! metric against a scored holdout.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::csv_field;
use crate::numeric::ordered_mean;
use crate::types::{DistanceMetric, EmbeddingSet, KnnConfig, Provenance, ScoreTable};

fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|&x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// Row norms for cosine search, computed once per query batch. Errors on
/// any zero-norm row, for which cosine distance is undefined.
fn cosine_norms(source: &EmbeddingSet) -> Result<Vec<f64>> {
    (0..source.len())
        .map(|i| {
            let rn = norm(source.row(i));
            if rn == 0.0 {
                return Err(Error::invalid(format!(
                    "cosine distance undefined: row '{}' has zero norm",
                    source.ids[i]
                )));
            }
            Ok(rn)
        })
        .collect()
}

fn knn_with_norms(
    source: &EmbeddingSet,
    row_norms: Option<&[f64]>,
    query: &[f64],
    cfg: &KnnConfig,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    if source.is_empty() {
        return Err(Error::invalid("empty source embedding set"));
    }
    if query.len() != source.dim {
        return Err(Error::invalid(format!(
            "query has {} values, source dimension is {}",
            query.len(),
            source.dim
        )));
    }
    if let Some(i) = query.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("query[{i}] is not finite")));
    }
    if cfg.k > source.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} source rows",
            cfg.k,
            source.len()
        )));
    }
    let query_norm = match cfg.metric {
        DistanceMetric::Cosine => {
            let qn = norm(query);
            if qn == 0.0 {
                return Err(Error::invalid(
                    "cosine distance undefined for a zero-norm query",
                ));
            }
            qn
        }
        DistanceMetric::Euclidean => 0.0,
    };

    let mut keyed: Vec<(f64, usize)> = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let row = source.row(i);
        let d = match cfg.metric {
            // squared distance orders identically to the distance itself
            DistanceMetric::Euclidean => squared_euclidean(query, row),
            DistanceMetric::Cosine => {
                let rn = match row_norms {
                    Some(norms) => norms[i],
                    None => {
                        let rn = norm(row);
                        if rn == 0.0 {
                            return Err(Error::invalid(format!(
                                "cosine distance undefined: row '{}' has zero norm",
                                source.ids[i]
                            )));
                        }
                        rn
                    }
                };
                1.0 - dot(query, row) / (query_norm * rn)
            }
        };
        keyed.push((d, i));
    }
    // finite keys, so total_cmp is plain numeric order; the index component
    // makes the order strict
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if cfg.k < keyed.len() {
        keyed.select_nth_unstable_by(cfg.k - 1, cmp);
        keyed.truncate(cfg.k);
    }
    keyed.sort_unstable_by(cmp);
    Ok(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Indices of the k nearest source rows, nearest first. Equal distances
/// break toward the smaller row index, so the result is a pure function
/// of the inputs.
pub fn knn_indices(source: &EmbeddingSet, query: &[f64], cfg: &KnnConfig) -> Result<Vec<usize>> {
    knn_with_norms(source, None, query, cfg)
}

fn row_scores(source: &EmbeddingSet, scores: &ScoreTable) -> Result<Vec<f64>> {
    source
        .ids
        .iter()
        .map(|id| match scores.entries.get(id) {
            Some(&s) if s.is_finite() => Ok(s),
            Some(&s) => Err(Error::invalid(format!("score for '{id}' is {s}"))),
            None => Err(Error::invalid(format!("source id '{id}' has no score"))),
        })
        .collect()
}

fn score_bounds(scores: &[f64]) -> (f64, f64) {
    let mut min = scores[0];
    let mut max = scores[0];
    for &s in &scores[1..] {
        min = min.min(s);
        max = max.max(s);
    }
    (min, max)
}

/// Predicts a score for every destination row as the mean of its k nearest
/// scored source rows, clamped into the observed source score range.
///
/// Returns the predicted table plus warnings (ids present on both sides).
pub fn extrapolate_scores(
    source: &EmbeddingSet,
    source_scores: &ScoreTable,
    dest: &EmbeddingSet,
    cfg: &KnnConfig,
) -> Result<(ScoreTable, Vec<String>)> {
    cfg.validate()?;
    source.validate()?;
    dest.validate()?;
    if source.is_empty() {
        return Err(Error::invalid("empty source embedding set"));
    }
    if dest.dim != source.dim {
        return Err(Error::invalid(format!(
            "source dimension {} does not match destination dimension {}",
            source.dim, dest.dim
        )));
    }
    if cfg.k > source.len() {
        return Err(Error::invalid(format!(
            "k = {} exceeds the {} source rows",
            cfg.k,
            source.len()
        )));
    }
    let aligned = row_scores(source, source_scores)?;
    let (min, max) = score_bounds(&aligned);

    let mut warnings = Vec::new();
    let source_ids: BTreeSet<&str> = source.ids.iter().map(String::as_str).collect();
    let shared = dest
        .ids
        .iter()
        .filter(|id| source_ids.contains(id.as_str()))
        .count();
    if shared > 0 {
        warnings.push(format!(
            "{shared} destination id(s) already present in the source set"
        ));
    }

    let row_norms = match cfg.metric {
        DistanceMetric::Cosine => Some(cosine_norms(source)?),
        DistanceMetric::Euclidean => None,
    };
    let predicted: Vec<f64> = (0..dest.len())
        .into_par_iter()
        .map(|i| {
            let neighbors = knn_with_norms(source, row_norms.as_deref(), dest.row(i), cfg)?;
            let vals: Vec<f64> = neighbors.iter().map(|&j| aligned[j]).collect();
            // the clamp keeps rounding from ever leaving the source range
            Ok(ordered_mean(&vals).clamp(min, max))
        })
        .collect::<Result<_>>()?;

    let mut params = source_scores.params.clone();
    if let Some(obj) = params.as_object_mut() {
        obj.insert(
            "extrapolation".into(),
            json!({"k": cfg.k, "metric": cfg.metric}),
        );
    }
    let mut table = ScoreTable::new(source_scores.metric, params, Provenance::Extrapolated);
    for (id, s) in dest.ids.iter().zip(predicted) {
        table.entries.insert(id.clone(), s);
    }
    Ok((table, warnings))
}

/// Mean absolute error between two tables over identical id sets.
pub fn mae(predicted: &ScoreTable, truth: &ScoreTable) -> Result<f64> {
    if predicted.is_empty() || truth.is_empty() {
        return Err(Error::invalid("mae needs non-empty score tables"));
    }
    if predicted.len() != truth.len() {
        return Err(Error::invalid(format!(
            "id sets differ: {} predicted vs {} truth entries",
            predicted.len(),
            truth.len()
        )));
    }
    let mut total = 0.0;
    for ((pid, p), (tid, t)) in predicted.entries.iter().zip(&truth.entries) {
        if pid != tid {
            return Err(Error::invalid(format!(
                "id sets differ: '{pid}' vs '{tid}'"
            )));
        }
        total += (p - t).abs();
    }
    Ok(total / predicted.len() as f64)
}

/// Constant predictor: every destination id gets the source mean, clamped
/// into the source range. The cheapest unbiased estimate, and the bar any
/// extrapolation has to clear.
pub fn mean_baseline(source_scores: &ScoreTable, dest_ids: &[String]) -> Result<ScoreTable> {
    if source_scores.is_empty() {
        return Err(Error::invalid("cannot average an empty score table"));
    }
    let vals: Vec<f64> = source_scores.entries.values().copied().collect();
    if let Some(bad) = vals.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("non-finite source score {bad}")));
    }
    let (min, max) = score_bounds(&vals);
    let value = ordered_mean(&vals).clamp(min, max);

    let mut params = source_scores.params.clone();
    if let Some(obj) = params.as_object_mut() {
        obj.insert("extrapolation".into(), json!({"baseline": "mean"}));
    }
    let mut table = ScoreTable::new(source_scores.metric, params, Provenance::Extrapolated);
    for id in dest_ids {
        if table.entries.insert(id.clone(), value).is_some() {
            return Err(Error::invalid(format!("duplicate destination id '{id}'")));
        }
    }
    Ok(table)
}

/// A named scored embedding set usable as an extrapolation source.
#[derive(Debug, Clone)]
pub struct GridSource {
    pub name: String,
    pub embeddings: EmbeddingSet,
    pub scores: ScoreTable,
}

impl GridSource {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::invalid("source with empty name"));
        }
        self.embeddings.validate()?;
        if self.embeddings.len() != self.scores.len() {
            return Err(Error::invalid(format!(
                "source '{}': {} embedding rows but {} scores",
                self.name,
                self.embeddings.len(),
                self.scores.len()
            )));
        }
        for id in &self.embeddings.ids {
            if !self.scores.entries.contains_key(id) {
                return Err(Error::invalid(format!(
                    "source '{}': id '{id}' has no score",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// The hyperparameter grid: every source x metric x k cell is evaluated.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub k_values: Vec<usize>,
    pub metrics: Vec<DistanceMetric>,
    pub sources: Vec<GridSource>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() {
            return Err(Error::invalid("grid needs at least one k"));
        }
        if self.k_values.contains(&0) {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.metrics.is_empty() {
            return Err(Error::invalid("grid needs at least one distance metric"));
        }
        if self.sources.is_empty() {
            return Err(Error::invalid("grid needs at least one source"));
        }
        let mut names = BTreeSet::new();
        for source in &self.sources {
            source.validate()?;
            if !names.insert(source.name.as_str()) {
                return Err(Error::invalid(format!(
                    "duplicate source name '{}'",
                    source.name
                )));
            }
        }
        Ok(())
    }
}

/// One evaluated grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub source: String,
    pub metric: DistanceMetric,
    pub k: usize,
    pub mae: f64,
}

/// Mean-baseline error for one source, for the same holdout.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineCell {
    pub source: String,
    pub mae: f64,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    /// Cells from best to worst MAE; ties break by source, metric, then k.
    pub cells: Vec<GridCell>,
    pub baselines: Vec<BaselineCell>,
}

impl GridSearchResult {
    pub fn best(&self) -> Option<&GridCell> {
        self.cells.first()
    }

    pub fn baseline_for(&self, source: &str) -> Option<f64> {
        self.baselines
            .iter()
            .find(|b| b.source == source)
            .map(|b| b.mae)
    }
}

/// Evaluates every grid cell against a disjoint scored holdout.
pub fn grid_search(
    spec: &GridSpec,
    holdout: &EmbeddingSet,
    holdout_truth: &ScoreTable,
) -> Result<GridSearchResult> {
    spec.validate()?;
    holdout.validate()?;
    if holdout.is_empty() {
        return Err(Error::invalid("empty holdout set"));
    }
    for id in &holdout.ids {
        if !holdout_truth.entries.contains_key(id) {
            return Err(Error::invalid(format!(
                "holdout id '{id}' has no true score"
            )));
        }
    }
    let holdout_ids: BTreeSet<&str> = holdout.ids.iter().map(String::as_str).collect();
    for source in &spec.sources {
        if let Some(id) = source
            .embeddings
            .ids
            .iter()
            .find(|id| holdout_ids.contains(id.as_str()))
        {
            return Err(Error::invalid(format!(
                "holdout overlaps source '{}' (id '{id}')",
                source.name
            )));
        }
    }
    let truth_on_holdout = {
        let mut t = ScoreTable::new(
            holdout_truth.metric,
            holdout_truth.params.clone(),
            holdout_truth.provenance,
        );
        for id in &holdout.ids {
            t.entries.insert(id.clone(), holdout_truth.entries[id]);
        }
        t
    };

    let mut cells = Vec::new();
    let mut baselines = Vec::new();
    for source in &spec.sources {
        for &metric in &spec.metrics {
            for &k in &spec.k_values {
                let cfg = KnnConfig::new(k, metric);
                let (predicted, _) =
                    extrapolate_scores(&source.embeddings, &source.scores, holdout, &cfg)?;
                cells.push(GridCell {
                    source: source.name.clone(),
                    metric,
                    k,
                    mae: mae(&predicted, &truth_on_holdout)?,
                });
            }
        }
        let baseline = mean_baseline(&source.scores, &holdout.ids)?;
        baselines.push(BaselineCell {
            source: source.name.clone(),
            mae: mae(&baseline, &truth_on_holdout)?,
        });
    }
    cells.sort_by(|a, b| {
        a.mae
            .total_cmp(&b.mae)
            .then_with(|| a.source.cmp(&b.source))
            .then_with(|| a.metric.to_string().cmp(&b.metric.to_string()))
            .then(a.k.cmp(&b.k))
    });
    Ok(GridSearchResult { cells, baselines })
}

/// CSV rows for every cell (best MAE first), then one two-column
/// `source_variant,baseline_mae` row per source.
pub fn write_grid_csv(result: &GridSearchResult, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "source_variant,metric,k,mae").map_err(io_err)?;
    for cell in &result.cells {
        writeln!(
            w,
            "{},{},{},{}",
            csv_field(&cell.source),
            cell.metric,
            cell.k,
            cell.mae
        )
        .map_err(io_err)?;
    }
    for b in &result.baselines {
        writeln!(w, "{},{}", csv_field(&b.source), b.mae).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Concatenates id-disjoint scored sets into one source.
///
/// Returns warnings instead of errors for benign-but-suspicious input:
/// differing score parameters or per-part score means more than 2x apart.
pub fn merge_sources(name: &str, parts: &[GridSource]) -> Result<(GridSource, Vec<String>)> {
    if parts.is_empty() {
        return Err(Error::invalid("nothing to merge"));
    }
    for part in parts {
        part.validate()?;
    }
    let dim = parts[0].embeddings.dim;
    let metric = parts[0].scores.metric;
    let mut warnings = Vec::new();
    let mut merged_emb = EmbeddingSet::new(dim);
    let mut merged_scores = ScoreTable::new(
        metric,
        parts[0].scores.params.clone(),
        parts[0].scores.provenance,
    );
    let mut means = Vec::new();
    for part in parts {
        if part.embeddings.dim != dim {
            return Err(Error::invalid(format!(
                "part '{}' has dimension {}, expected {dim}",
                part.name, part.embeddings.dim
            )));
        }
        if part.scores.metric != metric {
            return Err(Error::invalid(format!(
                "part '{}' holds {} scores, expected {metric}",
                part.name, part.scores.metric
            )));
        }
        if part.scores.params != parts[0].scores.params {
            warnings.push(format!(
                "part '{}' was scored with different parameters than '{}'",
                part.name, parts[0].name
            ));
        }
        for i in 0..part.embeddings.len() {
            let id = &part.embeddings.ids[i];
            if merged_scores.entries.contains_key(id) {
                return Err(Error::invalid(format!(
                    "id '{id}' appears in more than one part"
                )));
            }
            merged_emb.push(
                id.clone(),
                part.embeddings.row(i),
                part.embeddings.labels[i],
            )?;
            merged_scores
                .entries
                .insert(id.clone(), part.scores.entries[id]);
        }
        let vals: Vec<f64> = part.scores.entries.values().copied().collect();
        means.push((part.name.clone(), ordered_mean(&vals)));
    }
    for (i, (name_a, mean_a)) in means.iter().enumerate() {
        for (name_b, mean_b) in &means[i + 1..] {
            let (lo, hi) = if mean_a <= mean_b {
                (*mean_a, *mean_b)
            } else {
                (*mean_b, *mean_a)
            };
            if hi > 2.0 * lo {
                warnings.push(format!(
                    "score scales differ: mean({name_a}) = {mean_a}, mean({name_b}) = {mean_b}"
                ));
            }
        }
    }
    let merged = GridSource {
        name: name.to_string(),
        embeddings: merged_emb,
        scores: merged_scores,
    };
    merged.validate()?;
    Ok((merged, warnings))
}

/// Tuned neighbor configurations for the bundled score/threat pairings.
pub fn knn_preset(name: &str) -> Option<KnnConfig> {
    let (k, metric) = match name {
        "du-linf" => (13, DistanceMetric::Cosine),
        "fp-linf" => (12, DistanceMetric::Euclidean),
        "du-l2" => (35, DistanceMetric::Cosine),
        "fp-l2" => (24, DistanceMetric::Euclidean),
        _ => return None,
    };
    Some(KnnConfig::new(k, metric))
}

pub const KNN_PRESET_NAMES: [&str; 4] = ["du-linf", "fp-linf", "du-l2", "fp-l2"];
