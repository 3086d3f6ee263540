//! Angle-criterion boundary detection for open surfaces.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::graph::RecurrenceGraph;
use crate::par::{self, Execution};

pub const DEFAULT_ANGLE_GAP: f64 = FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryParams {
    /// A point is boundary when the widest angular gap between its projected
    /// neighbors exceeds this many radians.
    pub angle_gap_threshold: f64,
    pub enabled: bool,
    /// Also overwrite the graph neighbors of boundary points.
    pub include_neighbors: bool,
}

impl Default for BoundaryParams {
    fn default() -> Self {
        BoundaryParams { angle_gap_threshold: DEFAULT_ANGLE_GAP, enabled: false, include_neighbors: true }
    }
}

impl BoundaryParams {
    pub fn open_surface() -> Self {
        BoundaryParams { enabled: true, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.angle_gap_threshold;
        if !(t > 0.0 && t < TAU) {
            return Err(Error::InvalidParameter(format!("angle gap threshold must lie in (0, 2pi), got {t}")));
        }
        Ok(())
    }
}

/// Widest gap between consecutive polar angles of the neighbors of `i`
/// projected onto the local principal plane. Points with fewer than three
/// neighbors report a full turn.
pub fn max_angle_gap(i: usize, cloud: &PointCloud, graph: &RecurrenceGraph) -> f64 {
    let nbrs = graph.neighbors(i);
    if nbrs.len() < 3 {
        return TAU;
    }
    let vi = cloud.get(i);
    let (u, w) = tangent_basis(vi, nbrs.iter().map(|&j| cloud.get(j)));

    let mut angles: Vec<f64> = nbrs
        .iter()
        .filter_map(|&j| {
            let d = cloud.get(j) - vi;
            let (a, b) = (d.dot(u), d.dot(w));
            (a.hypot(b) > 1e-12 * d.norm()).then(|| b.atan2(a))
        })
        .collect();
    if angles.is_empty() {
        return TAU;
    }
    angles.sort_by(f64::total_cmp);
    let wrap = angles[0] + TAU - angles[angles.len() - 1];
    angles.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max)
}

/// Orthonormal in-plane axes of the best-fit plane through a point and its
/// neighbors: the two leading principal directions.
fn tangent_basis(center: Point3, neighbors: impl Iterator<Item = Point3> + Clone) -> (Point3, Point3) {
    let count = neighbors.clone().count() + 1;
    let mean = neighbors.clone().fold(center, |acc, p| acc + p) / count as f64;
    let mut cov = Matrix3::<f64>::zeros();
    for p in std::iter::once(center).chain(neighbors) {
        let d = p - mean;
        let v = Vector3::new(d.x, d.y, d.z);
        cov += v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let col = |k: usize| {
        let c = eig.eigenvectors.column(k);
        Point3::new(c[0], c[1], c[2])
    };
    let u = col(order[0]);
    let normal = col(order[2]);
    let w = normal.cross(u);
    let w = w / w.norm();
    (u, w)
}

/// Indices of boundary points. Empty when `params.enabled` is false.
pub fn detect_boundary_points(
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &BoundaryParams,
) -> Result<BTreeSet<usize>> {
    params.validate()?;
    if !params.enabled {
        return Ok(BTreeSet::new());
    }
    if cloud.len() != graph.len() {
        return Err(Error::LengthMismatch { left: cloud.len(), right: graph.len() });
    }
    let flags = par::map_indices(Execution::default(), cloud.len(), |i| {
        max_angle_gap(i, cloud, graph) > params.angle_gap_threshold
    });
    Ok(flags.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect())
}
