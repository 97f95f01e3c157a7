//! Order-canonical float reductions.
//!
//! Summing after sorting the addends makes a reduction invariant to input
//! permutation. Several identities lean on that: trace reversal must not
//! change a window statistic, and neighbor averages must not depend on
//! visit order.

/// Sum in total order; invariant to permutations of `values`.
pub(crate) fn ordered_sum(values: &[f64]) -> f64 {
    let mut buf = values.to_vec();
    buf.sort_unstable_by(f64::total_cmp);
    buf.iter().sum()
}

/// Permutation-invariant arithmetic mean. `values` must be non-empty.
pub(crate) fn ordered_mean(values: &[f64]) -> f64 {
    debug_assert!(!values.is_empty());
    ordered_sum(values) / values.len() as f64
}

/// Sample standard deviation (divisor n-1); exactly 0 for constant input.
pub(crate) fn sample_std(window: &[f64]) -> f64 {
    debug_assert!(window.len() >= 2);
    let mut min = window[0];
    let mut max = window[0];
    for &v in &window[1..] {
        min = min.min(v);
        max = max.max(v);
    }
    if min == max {
        return 0.0;
    }
    let mean = ordered_mean(window);
    let devsq: Vec<f64> = window.iter().map(|&x| (x - mean) * (x - mean)).collect();
    (ordered_sum(&devsq) / (window.len() - 1) as f64).sqrt()
}
