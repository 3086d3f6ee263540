//! Two-stage ranking: seeds by score, then labels by relaxation displacement.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::RecurrenceGraph;
use crate::scoring::ScoreField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingParams {
    /// Percentage of points taken as seeds (0.03 means 0.03 %).
    pub gamma_pct: f64,
    /// Percentage of points eligible for a positive label.
    pub delta_pct: f64,
    /// Minimum displacement of a positive label, scene units.
    pub tau: f64,
    pub iterations: usize,
}

impl RankingParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("gamma_pct", self.gamma_pct), ("delta_pct", self.delta_pct)] {
            if !(v > 0.0 && v <= 100.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 100], got {v}")));
            }
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be non-negative, got {}", self.tau)));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// `ceil(pct / 100 * n)`, treating values within 1e-9 of an integer as that
/// integer so that e.g. 0.03 % of 10000 is 3, not 4.
pub fn percent_quota(pct: f64, n: usize) -> usize {
    let x = pct / 100.0 * n as f64;
    let r = x.round();
    let q = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (q.max(0.0) as usize).min(n)
}

/// Indices ordered by descending key, lower index first among equal keys.
fn rank_descending(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]).then(a.cmp(&b)));
    order
}

/// The `ceil(gamma_pct% * N)` highest-scoring points. Zero scores are never
/// seeds, so fewer may be returned.
pub fn select_seeds(scores: &ScoreField, gamma_pct: f64) -> BTreeSet<usize> {
    let quota = percent_quota(gamma_pct, scores.len());
    rank_descending(&scores.values)
        .into_iter()
        .take(quota)
        .filter(|&i| scores.values[i] > 0.0)
        .collect()
}

/// As [`select_seeds`], but equal scores are ordered by descending
/// `tiebreak` before falling back to the lower index.
pub fn select_seeds_by(scores: &ScoreField, tiebreak: &[f64], gamma_pct: f64) -> Result<BTreeSet<usize>> {
    if tiebreak.len() != scores.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: tiebreak.len() });
    }
    let quota = percent_quota(gamma_pct, scores.len());
    let v = &scores.values;
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| {
        v[b].total_cmp(&v[a]).then(tiebreak[b].total_cmp(&tiebreak[a])).then(a.cmp(&b))
    });
    Ok(order.into_iter().take(quota).filter(|&i| v[i] > 0.0).collect())
}

/// Seeds together with all their graph neighbors.
pub fn build_optimizable_set(seeds: &BTreeSet<usize>, graph: &RecurrenceGraph) -> BTreeSet<usize> {
    let mut set = seeds.clone();
    for &s in seeds {
        set.extend(graph.neighbors(s).iter().copied());
    }
    set
}

/// Label 1 where a point ranks within the top `delta_pct`% by displacement
/// and its displacement exceeds `tau`.
pub fn classify(displacements: &[f64], delta_pct: f64, tau: f64) -> Vec<u8> {
    let quota = percent_quota(delta_pct, displacements.len());
    let mut labels = vec![0u8; displacements.len()];
    for i in rank_descending(displacements).into_iter().take(quota) {
        if displacements[i] > tau {
            labels[i] = 1;
        }
    }
    labels
}
