//! Pointwise check of the force lower bound
//! `|f_i| >= |n . f_i| >= alpha |kappa_i| - beta`.
//!
//! `kappa_i = v_i - c_i` is the offset of a point from the centroid of its
//! graph neighbors and `n` its direction. With `lambda` the distance to the
//! nearest graph neighbor, `m = |N(i)|` and `N` the cloud size,
//!
//! ```text
//! alpha = lambda * m / K
//! beta  = C K^(p+1) * (m * lambda^(1-p) + N / xi^(p-1))
//! ```
//!
//! Both are evaluated per point.

use crate::dynamics::{compute_forces, ForceField, ForceParams};
use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::graph::RecurrenceGraph;

/// `|kappa|` at or below this leaves `n` undefined; such points are skipped.
pub const KAPPA_EPS: f64 = 1e-12;
/// Additive tolerance of the bound check.
pub const BOUND_TOLERANCE: f64 = 1e-9;

pub fn local_centroid(i: usize, cloud: &PointCloud, graph: &RecurrenceGraph) -> Result<Point3> {
    let nbrs = graph.neighbors(i);
    if nbrs.is_empty() {
        return Err(Error::EmptyNeighborhood { index: i });
    }
    let sum = nbrs.iter().fold(Point3::ZERO, |acc, &j| acc + cloud.get(j));
    Ok(sum / nbrs.len() as f64)
}

pub fn kappa(i: usize, cloud: &PointCloud, graph: &RecurrenceGraph) -> Result<Point3> {
    Ok(cloud.get(i) - local_centroid(i, cloud, graph)?)
}

/// `n = kappa / |kappa|`, or `None` when `|kappa| <= KAPPA_EPS`.
pub fn unit_direction(kappa: Point3) -> Option<Point3> {
    let norm = kappa.norm();
    (norm > KAPPA_EPS).then(|| kappa / norm)
}

/// `(alpha, beta)` for point `i`.
pub fn theorem_bounds(
    i: usize,
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &ForceParams,
) -> Result<(f64, f64)> {
    let nbrs = graph.neighbors(i);
    if nbrs.is_empty() {
        return Err(Error::EmptyNeighborhood { index: i });
    }
    let vi = cloud.get(i);
    let (nearest, lambda) = nbrs
        .iter()
        .map(|&j| (j, vi.distance(cloud.get(j))))
        .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if !(lambda > params.coincidence_eps) {
        let (a, b) = (i.min(nearest), i.max(nearest));
        return Err(Error::CoincidentPoints { i: a, j: b, distance: lambda });
    }
    let m = nbrs.len() as f64;
    let total = cloud.len() as f64;
    let alpha = lambda * m / params.k;
    let beta = params.repulsion_scale()
        * (m * lambda.powf(1.0 - params.p) + total / graph.xi().powf(params.p - 1.0));
    Ok((alpha, beta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointBound {
    pub index: usize,
    pub kappa_norm: f64,
    pub force_norm: f64,
    /// `|n . f_i|`.
    pub projection: f64,
    pub alpha: f64,
    pub beta: f64,
    /// `alpha |kappa| - beta`.
    pub bound: f64,
    pub satisfied: bool,
}

impl PointBound {
    /// `projection - bound`; negative only on a violation.
    pub fn slack(&self) -> f64 {
        self.projection - self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub records: Vec<PointBound>,
    /// Points with no graph neighbor.
    pub isolated: Vec<usize>,
    /// Points whose `|kappa|` is too small to define `n`.
    pub symmetric: Vec<usize>,
    /// Points where the bound is positive, i.e. not trivially true.
    pub non_vacuous: usize,
    /// Violations of `|f| >= |n . f|`.
    pub projection_violations: usize,
    /// Violations of `|n . f| >= alpha |kappa| - beta`.
    pub bound_violations: usize,
    pub min_slack: f64,
}

impl TheoremReport {
    pub fn violations(&self) -> usize {
        self.records.iter().filter(|r| !r.satisfied).count()
    }

    pub fn checked(&self) -> usize {
        self.records.len()
    }
}

pub fn verify_lower_bound(
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &ForceParams,
) -> Result<TheoremReport> {
    let forces = compute_forces(cloud, graph, params)?;
    verify_with_forces(cloud, graph, params, &forces)
}

/// As [`verify_lower_bound`] with precomputed forces.
pub fn verify_with_forces(
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &ForceParams,
    forces: &ForceField,
) -> Result<TheoremReport> {
    if forces.len() != cloud.len() {
        return Err(Error::LengthMismatch { left: forces.len(), right: cloud.len() });
    }
    let mut report = TheoremReport {
        records: Vec::new(),
        isolated: Vec::new(),
        symmetric: Vec::new(),
        non_vacuous: 0,
        projection_violations: 0,
        bound_violations: 0,
        min_slack: f64::INFINITY,
    };
    for i in 0..cloud.len() {
        if graph.degree(i) == 0 {
            report.isolated.push(i);
            continue;
        }
        let k = kappa(i, cloud, graph)?;
        let Some(n) = unit_direction(k) else {
            report.symmetric.push(i);
            continue;
        };
        let (alpha, beta) = theorem_bounds(i, cloud, graph, params)?;
        let f = forces.get(i);
        let force_norm = f.norm();
        let projection = n.dot(f).abs();
        let kappa_norm = k.norm();
        let bound = alpha * kappa_norm - beta;
        let projection_ok = force_norm + BOUND_TOLERANCE >= projection;
        let bound_ok = projection + BOUND_TOLERANCE >= bound;
        report.projection_violations += usize::from(!projection_ok);
        report.bound_violations += usize::from(!bound_ok);
        report.non_vacuous += usize::from(bound > 0.0);
        let record = PointBound {
            index: i,
            kappa_norm,
            force_norm,
            projection,
            alpha,
            beta,
            bound,
            satisfied: projection_ok && bound_ok,
        };
        report.min_slack = report.min_slack.min(record.slack());
        report.records.push(record);
    }
    Ok(report)
}
