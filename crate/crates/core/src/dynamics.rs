//! Spring-electrical force model.
//!
//! With `d = v_i - v_j`, the pair terms acting on point `i` are
//!
//! * over every other point: `-C K^(p+1) / |d|^p * d`
//! * over graph neighbors:   `|d| / K * d`
//!
//! and the net force is their sum, electrical sum first. Under these signs
//! ([`SignConvention::Reversed`]) springs push neighbors apart and charges
//! pull together. [`SignConvention::Classical`] negates both terms, which leaves
//! every energy unchanged and reverses the relaxation direction.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::graph::RecurrenceGraph;
use crate::par::{self, Execution};

pub const DEFAULT_COINCIDENCE_EPS: f64 = 1e-9;
pub const DEFAULT_FORCE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SignConvention {
    #[default]
    Reversed,
    Classical,
}

impl SignConvention {
    fn factor(self) -> f64 {
        match self {
            SignConvention::Reversed => 1.0,
            SignConvention::Classical => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SignConvention::Reversed => "reversed",
            SignConvention::Classical => "classical",
        }
    }
}

impl std::str::FromStr for SignConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reversed" => Ok(SignConvention::Reversed),
            "classical" => Ok(SignConvention::Classical),
            other => Err(Error::InvalidParameter(format!("unknown sign convention {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceParams {
    /// Repulsion scale `C`.
    pub c: f64,
    /// Natural spring length `K`.
    pub k: f64,
    /// Repulsion decay exponent `p`.
    pub p: f64,
    /// Relaxation step length.
    pub step: f64,
    pub sign: SignConvention,
    /// Pairs closer than this are rejected as coincident.
    pub coincidence_eps: f64,
    /// Points with a smaller net force do not move during relaxation.
    pub force_eps: f64,
}

impl ForceParams {
    pub fn new(c: f64, k: f64, p: f64, step: f64) -> Result<Self> {
        let params = ForceParams {
            c,
            k,
            p,
            step,
            sign: SignConvention::Reversed,
            coincidence_eps: DEFAULT_COINCIDENCE_EPS,
            force_eps: DEFAULT_FORCE_EPS,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_sign(mut self, sign: SignConvention) -> Self {
        self.sign = sign;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("C", self.c), ("K", self.k), ("p", self.p), ("step", self.step)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.coincidence_eps >= 0.0 && self.force_eps >= 0.0) {
            return Err(Error::InvalidParameter("epsilons must be non-negative".into()));
        }
        Ok(())
    }

    /// `C * K^(p+1)`.
    #[inline]
    pub(crate) fn repulsion_scale(&self) -> f64 {
        self.c * self.k.powf(self.p + 1.0)
    }
}

/// Net force per point, aligned to cloud indices.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceField {
    forces: Vec<Point3>,
}

impl ForceField {
    pub fn new(forces: Vec<Point3>) -> Self {
        ForceField { forces }
    }

    pub fn len(&self) -> usize {
        self.forces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces.is_empty()
    }

    pub fn get(&self, i: usize) -> Point3 {
        self.forces[i]
    }

    pub fn as_slice(&self) -> &[Point3] {
        &self.forces
    }
}

/// Per-point energy `|f_i|^2` and its total.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyField {
    pub values: Vec<f64>,
    pub total: f64,
}

impl EnergyField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[inline]
fn repulsive_at(i: usize, points: &[Point3], params: &ForceParams) -> Result<Point3> {
    let vi = points[i];
    let scale = params.repulsion_scale();
    let eps2 = params.coincidence_eps * params.coincidence_eps;
    let half_p = 0.5 * params.p;
    let square_law = params.p == 2.0;
    let mut sum = Point3::ZERO;
    for (j, &vj) in points.iter().enumerate() {
        if j == i {
            continue;
        }
        let d = vi - vj;
        let d2 = d.norm_squared();
        if d2 < eps2 {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            return Err(Error::CoincidentPoints { i: a, j: b, distance: d2.sqrt() });
        }
        let denom = if square_law { d2 } else { d2.powf(half_p) };
        sum -= d * (scale / denom);
    }
    Ok(sum * params.sign.factor())
}

#[inline]
fn attractive_at(i: usize, points: &[Point3], graph: &RecurrenceGraph, params: &ForceParams) -> Point3 {
    let vi = points[i];
    let mut sum = Point3::ZERO;
    for &j in graph.neighbors(i) {
        let d = vi - points[j];
        sum += d * (d.norm() / params.k);
    }
    sum * params.sign.factor()
}

#[inline]
fn net_at(i: usize, points: &[Point3], graph: &RecurrenceGraph, params: &ForceParams) -> Result<Point3> {
    let repulsive = repulsive_at(i, points, params)?;
    Ok(repulsive + attractive_at(i, points, graph, params))
}

/// Electrical term on point `i`, summed over every other point.
pub fn repulsive_force(i: usize, cloud: &PointCloud, params: &ForceParams) -> Result<Point3> {
    repulsive_at(i, cloud.points(), params)
}

/// Spring term on point `i`, summed over its graph neighbors.
pub fn attractive_force(
    i: usize,
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &ForceParams,
) -> Point3 {
    attractive_at(i, cloud.points(), graph, params)
}

pub fn net_force(i: usize, cloud: &PointCloud, graph: &RecurrenceGraph, params: &ForceParams) -> Result<Point3> {
    net_at(i, cloud.points(), graph, params)
}

/// Exact O(N^2) evaluation of the net force on every point.
pub fn compute_forces(cloud: &PointCloud, graph: &RecurrenceGraph, params: &ForceParams) -> Result<ForceField> {
    compute_forces_with(Execution::default(), cloud, graph, params)
}

pub fn compute_forces_with(
    exec: Execution,
    cloud: &PointCloud,
    graph: &RecurrenceGraph,
    params: &ForceParams,
) -> Result<ForceField> {
    check_alignment(cloud, graph)?;
    let points = cloud.points();
    let forces = par::try_map_indices(exec, points.len(), |i| net_at(i, points, graph, params))?;
    Ok(ForceField { forces })
}

pub fn energy_field(forces: &ForceField) -> EnergyField {
    let values: Vec<f64> = forces.forces.iter().map(|f| f.norm_squared()).collect();
    let total = values.iter().sum();
    EnergyField { values, total }
}

/// Outcome of [`update_positions`].
#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    pub cloud: PointCloud,
    /// Distance between final and original position, per point.
    pub displacements: Vec<f64>,
}

/// Move the `movable` points along their unit force direction, `step` per
/// iteration, with every move of an iteration computed from the same
/// snapshot. The graph keeps its original edges throughout.
pub fn update_positions(
    cloud: &PointCloud,
    movable: &BTreeSet<usize>,
    graph: &RecurrenceGraph,
    params: &ForceParams,
    iterations: usize,
) -> Result<Relaxation> {
    update_positions_with(Execution::default(), cloud, movable, graph, params, iterations)
}

pub fn update_positions_with(
    exec: Execution,
    cloud: &PointCloud,
    movable: &BTreeSet<usize>,
    graph: &RecurrenceGraph,
    params: &ForceParams,
    iterations: usize,
) -> Result<Relaxation> {
    check_alignment(cloud, graph)?;
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be at least 1".into()));
    }
    let n = cloud.len();
    if let Some(&bad) = movable.iter().find(|&&i| i >= n) {
        return Err(Error::InvalidParameter(format!("movable index {bad} out of range for {n} points")));
    }
    let movable: Vec<usize> = movable.iter().copied().collect();
    let original = cloud.points();
    let mut current = cloud.clone();

    for _ in 0..iterations {
        let snapshot = current.points();
        let moves = par::try_map_over(exec, &movable, |i| {
            let f = net_at(i, snapshot, graph, params)?;
            let norm = f.norm();
            Ok(if norm > params.force_eps { f * (params.step / norm) } else { Point3::ZERO })
        })?;
        let positions = current.points_mut();
        for (&i, delta) in movable.iter().zip(moves) {
            positions[i] += delta;
        }
    }

    let displacements = original
        .iter()
        .zip(current.points())
        .map(|(&a, &b)| (b - a).norm())
        .collect();
    Ok(Relaxation { cloud: current, displacements })
}

fn check_alignment(cloud: &PointCloud, graph: &RecurrenceGraph) -> Result<()> {
    if cloud.len() != graph.len() {
        return Err(Error::LengthMismatch { left: cloud.len(), right: graph.len() });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_recurrence_graph;
    use crate::spatial::SpatialIndex;

    fn cloud(points: &[[f64; 3]]) -> PointCloud {
        PointCloud::new(points.iter().map(|&p| Point3::from(p)).collect()).unwrap()
    }

    fn graph_of(cloud: &PointCloud, xi: f64) -> RecurrenceGraph {
        build_recurrence_graph(&SpatialIndex::new(cloud), xi).unwrap()
    }

    fn unit_params() -> ForceParams {
        ForceParams::new(1.0, 1.0, 2.0, 0.1).unwrap()
    }

    #[test]
    fn pair_terms_as_written() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let g = graph_of(&c, 1.5);
        let params = unit_params();
        assert_eq!(repulsive_force(0, &c, &params).unwrap(), Point3::new(1.0, 0.0, 0.0));
        assert_eq!(attractive_force(0, &c, &g, &params), Point3::new(-1.0, 0.0, 0.0));
        // equilibrium: d^(p+1) = C K^(p+2)
        assert_eq!(net_force(0, &c, &g, &params).unwrap(), Point3::ZERO);
        assert_eq!(net_force(1, &c, &g, &params).unwrap(), Point3::ZERO);
    }

    #[test]
    fn classical_convention_negates() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.5, 0.0], [0.2, 2.0, 1.0]]);
        let g = graph_of(&c, 1.5);
        let reversed = unit_params();
        let classical = reversed.with_sign(SignConvention::Classical);
        for i in 0..3 {
            assert_eq!(
                net_force(i, &c, &g, &reversed).unwrap(),
                -net_force(i, &c, &g, &classical).unwrap()
            );
        }
    }

    #[test]
    fn symmetric_neighbors_cancel() {
        let c = cloud(&[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let params = unit_params();
        assert_eq!(repulsive_force(1, &c, &params).unwrap(), Point3::ZERO);

        let mut pts = vec![[0.0, 0.0, 0.0]];
        for k in 0..6 {
            let a = k as f64 * std::f64::consts::PI / 3.0;
            pts.push([a.cos(), a.sin(), 0.0]);
        }
        let hex = cloud(&pts);
        let g = graph_of(&hex, 1.01);
        assert_eq!(g.degree(0), 6);
        assert!(attractive_force(0, &hex, &g, &params).norm() < 1e-12);
        assert!(net_force(0, &hex, &g, &params).unwrap().norm() < 1e-12);
    }

    #[test]
    fn isolated_point_has_no_spring_force() {
        let c = cloud(&[[0.0, 0.0, 0.0], [5.0, 0.0, 0.0]]);
        let g = graph_of(&c, 1.0);
        assert_eq!(attractive_force(0, &c, &g, &unit_params()), Point3::ZERO);
    }

    #[test]
    fn coincident_points_are_reported() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 1e-12]]);
        let g = graph_of(&c, 0.5);
        let err = compute_forces(&c, &g, &unit_params()).unwrap_err();
        assert!(matches!(err, Error::CoincidentPoints { i: 1, j: 2, .. }), "{err:?}");
    }

    #[test]
    fn equilateral_triangle_at_equilibrium() {
        let h = 3f64.sqrt() / 2.0;
        let c = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, h, 0.0]]);
        let g = graph_of(&c, 1.5);
        let field = compute_forces(&c, &g, &unit_params()).unwrap();
        for i in 0..3 {
            assert!(field.get(i).norm() < 1e-9, "{:?}", field.get(i));
        }
    }

    #[test]
    fn planar_stencil_center_is_balanced() {
        let mut pts = Vec::new();
        for i in -1..=1 {
            for j in -1..=1 {
                pts.push([i as f64, j as f64, 0.0]);
            }
        }
        let c = cloud(&pts);
        let g = graph_of(&c, 1.5);
        let field = compute_forces(&c, &g, &ForceParams::new(0.2, 1.0, 2.0, 0.1).unwrap()).unwrap();
        assert!(field.get(4).norm() <= 1e-9);
    }

    #[test]
    fn energy_of_simple_fields() {
        let zero = energy_field(&ForceField::new(vec![Point3::ZERO; 4]));
        assert_eq!(zero.values, vec![0.0; 4]);
        assert_eq!(zero.total, 0.0);
        let e = energy_field(&ForceField::new(vec![Point3::new(3.0, 4.0, 0.0)]));
        assert_eq!(e.values, vec![25.0]);
        assert_eq!(e.total, 25.0);
    }

    #[test]
    fn empty_movable_set_changes_nothing() {
        let c = cloud(&[[0.0, 0.0, 0.0], [1.3, 0.0, 0.0], [0.0, 0.7, 0.0]]);
        let g = graph_of(&c, 2.0);
        let r = update_positions(&c, &BTreeSet::new(), &g, &unit_params(), 5).unwrap();
        assert_eq!(r.cloud, c);
        assert!(r.displacements.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn single_step_moves_exactly_step() {
        let c = cloud(&[[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        let g = graph_of(&c, 1.0);
        let params = ForceParams::new(1.0, 1.0, 2.0, 0.25).unwrap();
        let movable = BTreeSet::from([0]);
        let r = update_positions(&c, &movable, &g, &params, 1).unwrap();
        assert!((r.displacements[0] - 0.25).abs() < 1e-15);
        assert_eq!(r.displacements[1], 0.0);
        assert_eq!(r.cloud.get(1), c.get(1));
    }

    #[test]
    fn zero_force_points_stay_put() {
        let c = cloud(&[[-1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let g = graph_of(&c, 1.5);
        let r = update_positions(&c, &BTreeSet::from([1]), &g, &unit_params(), 3).unwrap();
        assert_eq!(r.displacements[1], 0.0);
    }

    #[test]
    fn dented_center_moves_farthest() {
        let mut pts = Vec::new();
        for i in 0..5 {
            for j in 0..5 {
                let z = if i == 2 && j == 2 { -0.6 } else { 0.0 };
                pts.push([i as f64, j as f64, z]);
            }
        }
        let c = cloud(&pts);
        let g = graph_of(&c, 1.5);
        let params = ForceParams::new(0.2, 1.0, 2.0, 0.05).unwrap().with_sign(SignConvention::Classical);
        let interior: BTreeSet<usize> =
            (1..4).flat_map(|i| (1..4).map(move |j| i * 5 + j)).collect();
        let r = update_positions(&c, &interior, &g, &params, 10).unwrap();
        let center = r.displacements[12];
        for &i in interior.iter().filter(|&&i| i != 12) {
            assert!(center > r.displacements[i], "point {i}: {} vs center {center}", r.displacements[i]);
        }
    }
}
