//! Turning score tables into kept/removed manifests.
//!
//! All orderings are total: score ties break lexicographically on id, so a
//! manifest is a pure function of its inputs (and the seed, for random
//! pruning).

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::rng::PortableRng;
use crate::types::{Direction, PruneManifest, PrunePolicy, ScoreTable};

/// Removal budget: a fraction of the universe (floor) or an exact count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Fraction(f64),
    Count(usize),
}

impl Budget {
    /// Number of samples to remove from a universe of `n`.
    fn removals(&self, n: usize) -> Result<usize> {
        match *self {
            Budget::Fraction(f) => {
                if !f.is_finite() || !(0.0..1.0).contains(&f) {
                    return Err(Error::invalid(format!("prune fraction {f} outside [0, 1)")));
                }
                Ok((f * n as f64).floor() as usize)
            }
            Budget::Count(c) => {
                if c > n {
                    return Err(Error::invalid(format!("cannot remove {c} of {n} samples")));
                }
                Ok(c)
            }
        }
    }

    fn fraction(&self) -> Option<f64> {
        match *self {
            Budget::Fraction(f) => Some(f),
            Budget::Count(_) => None,
        }
    }

    fn count(&self) -> Option<usize> {
        match *self {
            Budget::Fraction(_) => None,
            Budget::Count(c) => Some(c),
        }
    }
}

/// Ids ordered so that the removal candidates come first: ascending score
/// for keep-high, descending for keep-low, ids breaking ties.
fn removal_order(scores: &ScoreTable, direction: Direction) -> Vec<&str> {
    let mut order: Vec<(&str, f64)> = scores
        .entries
        .iter()
        .map(|(id, &s)| (id.as_str(), s))
        .collect();
    order.sort_by(|a, b| {
        let by_score = match direction {
            Direction::KeepHigh => a.1.total_cmp(&b.1),
            Direction::KeepLow => b.1.total_cmp(&a.1),
        };
        by_score.then(a.0.cmp(b.0))
    });
    order.into_iter().map(|(id, _)| id).collect()
}

fn build_manifest(
    removed: BTreeSet<String>,
    universe: impl Iterator<Item = String>,
    policy: PrunePolicy,
) -> PruneManifest {
    let kept: Vec<String> = universe.filter(|id| !removed.contains(id)).collect();
    PruneManifest {
        kept,
        removed: removed.into_iter().collect(),
        policy,
    }
}

/// Removes the lowest-scored (keep-high) or highest-scored (keep-low)
/// samples within the budget.
pub fn prune_by_score(
    scores: &ScoreTable,
    budget: Budget,
    direction: Direction,
) -> Result<PruneManifest> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot prune an empty score table"));
    }
    scores.validate()?;
    let m = budget.removals(scores.len())?;
    let order = removal_order(scores, direction);
    let removed: BTreeSet<String> = order[..m].iter().map(|s| s.to_string()).collect();
    let policy = PrunePolicy {
        fraction: budget.fraction(),
        count: budget.count(),
        direction: Some(direction),
        balanced: false,
        metric: scores.metric.to_string(),
        seed: None,
    };
    Ok(build_manifest(
        removed,
        scores.entries.keys().cloned(),
        policy,
    ))
}

/// Per-class removal counts: floor(f * n_c) each, then single extras by
/// descending fractional remainder until the global floor(f * n) is met.
/// Every class ends within one sample of its proportional share.
fn class_removals(
    class_sizes: &BTreeMap<u32, usize>,
    total: usize,
    goal: usize,
    fraction: f64,
) -> BTreeMap<u32, usize> {
    debug_assert!(goal <= total);
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    // (remainder desc, class asc) order for handing out adjustments
    let mut by_remainder: Vec<(f64, u32)> = Vec::new();
    let mut assigned = 0usize;
    for (&class, &size) in class_sizes {
        let share = fraction * size as f64;
        let base = (share.floor() as usize).min(size);
        counts.insert(class, base);
        assigned += base;
        by_remainder.push((share - base as f64, class));
    }
    by_remainder.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    // a full sweep adjusts every class by at most one; rounding can only
    // leave a deficit smaller than the class count, but loop defensively
    while assigned < goal {
        let before = assigned;
        for &(_, class) in &by_remainder {
            if assigned == goal {
                break;
            }
            let size = class_sizes[&class];
            let c = counts.get_mut(&class).unwrap();
            if *c < size {
                *c += 1;
                assigned += 1;
            }
        }
        debug_assert!(assigned > before, "no class can absorb another removal");
    }
    while assigned > goal {
        let before = assigned;
        for &(_, class) in by_remainder.iter().rev() {
            if assigned == goal {
                break;
            }
            let c = counts.get_mut(&class).unwrap();
            if *c > 0 {
                *c -= 1;
                assigned -= 1;
            }
        }
        debug_assert!(assigned < before);
    }
    counts
}

/// Score pruning that preserves class proportions: the budget is split
/// across classes so each experiences (as close as rounding allows) the
/// same removal fraction.
pub fn prune_balanced(
    scores: &ScoreTable,
    labels: &BTreeMap<String, u32>,
    budget: Budget,
    direction: Direction,
) -> Result<PruneManifest> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot prune an empty score table"));
    }
    scores.validate()?;
    for id in scores.entries.keys() {
        if !labels.contains_key(id) {
            return Err(Error::invalid(format!("scored id '{id}' has no label")));
        }
    }
    let n = scores.len();
    let m = budget.removals(n)?;
    let fraction = budget.fraction().unwrap_or(m as f64 / n as f64);

    let mut class_sizes: BTreeMap<u32, usize> = BTreeMap::new();
    for id in scores.entries.keys() {
        *class_sizes.entry(labels[id]).or_insert(0) += 1;
    }
    let counts = class_removals(&class_sizes, n, m, fraction);

    let order = removal_order(scores, direction);
    let mut removed: BTreeSet<String> = BTreeSet::new();
    let mut taken: BTreeMap<u32, usize> = BTreeMap::new();
    for id in order {
        let class = labels[id];
        let take = taken.entry(class).or_insert(0);
        if *take < counts[&class] {
            *take += 1;
            removed.insert(id.to_string());
        }
    }
    let policy = PrunePolicy {
        fraction: budget.fraction(),
        count: budget.count(),
        direction: Some(direction),
        balanced: true,
        metric: scores.metric.to_string(),
        seed: None,
    };
    Ok(build_manifest(
        removed,
        scores.entries.keys().cloned(),
        policy,
    ))
}

/// Seeded uniform random removal, optionally class-balanced. Ids are
/// processed in sorted order, so the manifest depends only on the id set,
/// the budget, and the seed.
pub fn prune_random(
    ids: &[String],
    labels: Option<&BTreeMap<String, u32>>,
    budget: Budget,
    seed: u64,
    balanced: bool,
) -> Result<PruneManifest> {
    if ids.is_empty() {
        return Err(Error::invalid("cannot prune an empty id set"));
    }
    let mut universe: Vec<String> = ids.to_vec();
    universe.sort_unstable();
    universe.dedup();
    if universe.len() != ids.len() {
        return Err(Error::invalid("duplicate ids in the prune universe"));
    }
    let n = universe.len();
    let m = budget.removals(n)?;
    let mut rng = PortableRng::seed_from_u64(seed);

    let removed: BTreeSet<String> = if balanced {
        let labels =
            labels.ok_or_else(|| Error::invalid("balanced random pruning needs labels"))?;
        for id in &universe {
            if !labels.contains_key(id) {
                return Err(Error::invalid(format!("id '{id}' has no label")));
            }
        }
        let fraction = budget.fraction().unwrap_or(m as f64 / n as f64);
        let mut class_sizes: BTreeMap<u32, usize> = BTreeMap::new();
        let mut members: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for id in &universe {
            let class = labels[id];
            *class_sizes.entry(class).or_insert(0) += 1;
            members.entry(class).or_default().push(id.clone());
        }
        let counts = class_removals(&class_sizes, n, m, fraction);
        let mut removed = BTreeSet::new();
        for (class, mut ids) in members {
            let take = counts[&class];
            rng.partial_shuffle(&mut ids, take);
            removed.extend(ids.into_iter().take(take));
        }
        removed
    } else {
        let mut pool = universe.clone();
        rng.partial_shuffle(&mut pool, m);
        pool.into_iter().take(m).collect()
    };

    let policy = PrunePolicy {
        fraction: budget.fraction(),
        count: budget.count(),
        direction: None,
        balanced,
        metric: "random".to_string(),
        seed: Some(seed),
    };
    Ok(build_manifest(removed, universe.into_iter(), policy))
}

/// Fraction of removed ids two manifests share. Both must partition the
/// same universe and remove the same number of samples.
pub fn overlap(a: &PruneManifest, b: &PruneManifest) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    let universe_a: BTreeSet<&str> = a
        .kept
        .iter()
        .chain(&a.removed)
        .map(String::as_str)
        .collect();
    let universe_b: BTreeSet<&str> = b
        .kept
        .iter()
        .chain(&b.removed)
        .map(String::as_str)
        .collect();
    if universe_a != universe_b {
        return Err(Error::invalid("manifests cover different id universes"));
    }
    if a.removed.len() != b.removed.len() {
        return Err(Error::invalid(format!(
            "removal sizes differ: {} vs {}",
            a.removed.len(),
            b.removed.len()
        )));
    }
    if a.removed.is_empty() {
        // nothing removed on either side: identical removal sets
        return Ok(1.0);
    }
    let removed_a: BTreeSet<&str> = a.removed.iter().map(String::as_str).collect();
    let shared = b
        .removed
        .iter()
        .filter(|id| removed_a.contains(id.as_str()))
        .count();
    Ok(shared as f64 / a.removed.len() as f64)
}
