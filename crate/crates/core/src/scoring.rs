//! Importance scores computed from certainty traces.
//!
//! Dynamic uncertainty (DU) averages a sliding-window sample standard
//! deviation over the trace. Frequency pruning (FP) aggregates normalized
//! DFT magnitudes over a bin band, skipping the DC bin so constant traces
//! score zero. Both read the same trace type; whether a trace holds clean
//! or adversarial certainties is a property of the input, not the metric.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::csv_field;
use crate::numeric::{ordered_sum, sample_std};
use crate::types::{CertaintyTrace, Metric, Provenance, ScoreTable, SpectralSummary};

/// Bin band dominated by slow certainty drift.
pub const LOW_BAND: (usize, usize) = (1, 10);
/// Bin band dominated by epoch-to-epoch oscillation.
pub const HIGH_BAND: (usize, usize) = (11, 150);

/// Dynamic uncertainty parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DuConfig {
    /// Sliding window length J.
    pub window: usize,
    /// Divide the window sum by K - J instead of the window count K - J + 1.
    pub paper_denominator: bool,
}

impl Default for DuConfig {
    fn default() -> Self {
        DuConfig {
            window: 10,
            paper_denominator: false,
        }
    }
}

impl DuConfig {
    pub fn new(window: usize) -> Self {
        DuConfig {
            window,
            ..DuConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::invalid(format!(
                "window J = {} but a standard deviation needs at least 2 points",
                self.window
            )));
        }
        Ok(())
    }

    fn params_json(&self) -> serde_json::Value {
        json!({"window": self.window, "paper_denominator": self.paper_denominator})
    }
}

/// How band magnitudes are reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Sum,
    Mean,
}

/// Frequency pruning parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FpConfig {
    /// First DFT bin of the band; must stay above the DC bin.
    pub lo: usize,
    /// Last bin, clamped to floor(K/2); `None` means up to floor(K/2).
    pub hi: Option<usize>,
    pub aggregation: Aggregation,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig {
            lo: 1,
            hi: None,
            aggregation: Aggregation::Sum,
        }
    }
}

impl FpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lo == 0 {
            return Err(Error::invalid(
                "band must exclude the DC bin; lo must be at least 1",
            ));
        }
        if let Some(hi) = self.hi {
            if hi < self.lo {
                return Err(Error::invalid(format!(
                    "empty band: lo = {} exceeds hi = {hi}",
                    self.lo
                )));
            }
        }
        Ok(())
    }

    fn params_json(&self, resolved_hi: usize) -> serde_json::Value {
        json!({"lo": self.lo, "hi": resolved_hi, "aggregation": self.aggregation})
    }
}

fn check_finite(trace: &CertaintyTrace) -> Result<()> {
    for (i, &c) in trace.certainties.iter().enumerate() {
        if !c.is_finite() {
            return Err(Error::invalid(format!(
                "trace '{}': certainty[{i}] = {c} is not finite",
                trace.id
            )));
        }
    }
    Ok(())
}

/// Sample standard deviation of the window ending at 1-based epoch `k`.
pub fn prediction_uncertainty(trace: &CertaintyTrace, k: usize, window: usize) -> Result<f64> {
    if window < 2 {
        return Err(Error::invalid(format!(
            "window J = {window} but a standard deviation needs at least 2 points"
        )));
    }
    let total = trace.epochs();
    if k < window || k > total {
        return Err(Error::invalid(format!(
            "trace '{}': epoch k = {k} outside [J = {window}, K = {total}]",
            trace.id
        )));
    }
    check_finite(trace)?;
    Ok(sample_std(&trace.certainties[k - window..k]))
}

/// Mean of the windowed standard deviations over epochs J..=K.
pub fn dynamic_uncertainty(trace: &CertaintyTrace, cfg: &DuConfig) -> Result<f64> {
    cfg.validate()?;
    let total = trace.epochs();
    let j = cfg.window;
    if total < j {
        return Err(Error::invalid(format!(
            "trace '{}': K = {total} epochs, shorter than window J = {j}",
            trace.id
        )));
    }
    check_finite(trace)?;
    let stds: Vec<f64> = (j..=total)
        .map(|k| sample_std(&trace.certainties[k - j..k]))
        .collect();
    let denominator = if cfg.paper_denominator {
        if total == j {
            return Err(Error::invalid(format!(
                "trace '{}': K = J = {j} makes the fixed K - J denominator zero",
                trace.id
            )));
        }
        (total - j) as f64
    } else {
        stds.len() as f64
    };
    Ok(ordered_sum(&stds) / denominator)
}

/// One-sided magnitude spectrum |F_m| for m = 0..=floor(K/2), unnormalized.
pub fn dft_magnitudes(signal: &[f64]) -> Result<Vec<f64>> {
    if signal.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    if let Some(i) = signal.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "signal[{i}] = {} is not finite",
            signal[i]
        )));
    }
    let k = signal.len();
    let mut buffer: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(k).process(&mut buffer);
    Ok(buffer[..=k / 2].iter().map(|c| c.norm()).collect())
}

/// Aggregates |F_m| / K over bins lo..=hi of the trace's spectrum.
///
/// The trace is shifted by its first value before the transform. Non-DC
/// bins are unchanged by a constant shift, so the score is identical in
/// exact arithmetic, and the shift makes two identities hold bitwise:
/// constant traces score exactly 0 and adding a constant never changes
/// the score when the shift itself is exact.
fn band_score(
    trace: &CertaintyTrace,
    lo: usize,
    hi: Option<usize>,
    agg: Aggregation,
) -> Result<f64> {
    let k = trace.epochs();
    if k == 0 {
        return Err(Error::invalid(format!(
            "trace '{}': no certainties recorded",
            trace.id
        )));
    }
    check_finite(trace)?;
    debug_assert!(lo >= 1);
    let half = k / 2;
    if lo > half {
        return Err(Error::invalid(format!(
            "trace '{}': band starts at bin {lo} but K = {k} epochs only reach bin {half}",
            trace.id
        )));
    }
    let hi = hi.unwrap_or(half).min(half);
    let base = trace.certainties[0];
    let shifted: Vec<f64> = trace.certainties.iter().map(|&c| c - base).collect();
    let magnitudes = dft_magnitudes(&shifted)?;
    let scale = 1.0 / k as f64;
    let band: Vec<f64> = magnitudes[lo..=hi].iter().map(|&m| m * scale).collect();
    let total = ordered_sum(&band);
    Ok(match agg {
        Aggregation::Sum => total,
        Aggregation::Mean => total / band.len() as f64,
    })
}

/// Frequency pruning score of one trace.
pub fn frequency_pruning_score(trace: &CertaintyTrace, cfg: &FpConfig) -> Result<f64> {
    cfg.validate()?;
    band_score(trace, cfg.lo, cfg.hi, cfg.aggregation)
}

/// Aggregated normalized magnitude over an explicit bin band.
pub fn band_magnitude(
    trace: &CertaintyTrace,
    lo: usize,
    hi: usize,
    agg: Aggregation,
) -> Result<f64> {
    let cfg = FpConfig {
        lo,
        hi: Some(hi),
        aggregation: agg,
    };
    cfg.validate()?;
    band_score(trace, lo, Some(hi), agg)
}

fn uniform_epochs(traces: &[CertaintyTrace]) -> Result<Option<usize>> {
    let mut epochs = None;
    for t in traces {
        match epochs {
            None => epochs = Some(t.epochs()),
            Some(k) if t.epochs() != k => {
                return Err(Error::invalid(format!(
                    "mixed epoch counts: trace '{}' has {}, previous traces have {k}",
                    t.id,
                    t.epochs()
                )))
            }
            _ => {}
        }
    }
    Ok(epochs)
}

fn collect_table(
    traces: &[CertaintyTrace],
    metric: Metric,
    params: serde_json::Value,
    score: impl Fn(&CertaintyTrace) -> Result<f64> + Sync,
) -> Result<ScoreTable> {
    let scored: Vec<(String, f64)> = traces
        .par_iter()
        .map(|t| score(t).map(|s| (t.id.clone(), s)))
        .collect::<Result<_>>()?;
    let mut table = ScoreTable::new(metric, params, Provenance::Computed);
    for (id, s) in scored {
        if table.entries.insert(id.clone(), s).is_some() {
            return Err(Error::invalid(format!("duplicate sample id '{id}'")));
        }
    }
    Ok(table)
}

/// Dynamic uncertainty for every trace; all traces must share one K.
pub fn score_traces_du(traces: &[CertaintyTrace], cfg: &DuConfig) -> Result<ScoreTable> {
    cfg.validate()?;
    uniform_epochs(traces)?;
    collect_table(traces, Metric::Du, cfg.params_json(), |t| {
        dynamic_uncertainty(t, cfg)
    })
}

/// Frequency pruning score for every trace; all traces must share one K.
pub fn score_traces_fp(traces: &[CertaintyTrace], cfg: &FpConfig) -> Result<ScoreTable> {
    cfg.validate()?;
    let epochs = uniform_epochs(traces)?;
    let resolved_hi = match epochs {
        Some(k) => cfg.hi.unwrap_or(k / 2).min(k / 2),
        None => cfg.hi.unwrap_or(0),
    };
    collect_table(traces, Metric::Fp, cfg.params_json(resolved_hi), |t| {
        frequency_pruning_score(t, cfg)
    })
}

/// Pearson correlation coefficient, clamped into [-1, 1].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} xs vs {} ys",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::invalid("correlation needs at least two points"));
    }
    for (i, v) in xs.iter().chain(ys).enumerate() {
        if !v.is_finite() {
            return Err(Error::invalid(format!("non-finite input at position {i}")));
        }
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::invalid(
            "correlation undefined: an input has zero variance",
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Band magnitudes per sample plus their correlation with the DU scores.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    pub rows: Vec<SpectralSummary>,
    /// Pearson r between DU and the low band (bins 1-10).
    pub r_low: f64,
    /// Pearson r between DU and the high band (bins 11-150, clamped).
    pub r_high: f64,
}

/// Compares per-sample band magnitudes against existing DU scores.
pub fn spectral_report(
    traces: &[CertaintyTrace],
    du_scores: &ScoreTable,
) -> Result<SpectralReport> {
    if traces.len() < 2 {
        return Err(Error::invalid(
            "spectral report needs at least two traces to correlate",
        ));
    }
    uniform_epochs(traces)?;
    let rows: Vec<SpectralSummary> = traces
        .par_iter()
        .map(|t| {
            let du = *du_scores
                .entries
                .get(&t.id)
                .ok_or_else(|| Error::invalid(format!("trace '{}' has no DU score", t.id)))?;
            Ok(SpectralSummary {
                sample_id: t.id.clone(),
                du_score: du,
                band_low: band_score(t, LOW_BAND.0, Some(LOW_BAND.1), Aggregation::Mean)?,
                band_high: band_score(t, HIGH_BAND.0, Some(HIGH_BAND.1), Aggregation::Mean)?,
            })
        })
        .collect::<Result<_>>()?;
    let dus: Vec<f64> = rows.iter().map(|r| r.du_score).collect();
    let lows: Vec<f64> = rows.iter().map(|r| r.band_low).collect();
    let highs: Vec<f64> = rows.iter().map(|r| r.band_high).collect();
    Ok(SpectralReport {
        r_low: pearson(&lows, &dus)?,
        r_high: pearson(&highs, &dus)?,
        rows,
    })
}

/// One CSV row per sample: id, DU score, low band, high band.
pub fn write_spectral_csv(report: &SpectralReport, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    writeln!(w, "id,du,band_low,band_high").map_err(io_err)?;
    for row in &report.rows {
        writeln!(
            w,
            "{},{},{},{}",
            csv_field(&row.sample_id),
            row.du_score,
            row.band_low,
            row.band_high
        )
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

#[derive(Serialize)]
struct CorrelationDoc {
    r_low: f64,
    r_high: f64,
}

/// The two correlations as a small JSON document.
pub fn write_spectral_correlations(report: &SpectralReport, path: &std::path::Path) -> Result<()> {
    use std::io::Write;
    let doc = CorrelationDoc {
        r_low: report.r_low,
        r_high: report.r_high,
    };
    let body = serde_json::to_string(&doc).map_err(|e| Error::invalid(e.to_string()))?;
    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(body.as_bytes())
        .map_err(|e| Error::io(path, e))?;
    file.write_all(b"\n").map_err(|e| Error::io(path, e))
}
