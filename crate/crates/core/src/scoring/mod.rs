//! Local energy normalization and the open-surface boundary condition.

mod boundary;

pub use boundary::{detect_boundary_points, BoundaryParams, DEFAULT_ANGLE_GAP};

use std::collections::BTreeSet;

use crate::dynamics::EnergyField;
use crate::error::{Error, Result};
use crate::graph::RecurrenceGraph;
use crate::par::{self, Execution};
use crate::spatial::SpatialIndex;

/// Score assigned to boundary points and their neighbors.
pub const BOUNDARY_SCORE: f64 = 0.25;
/// Upper clip of the activation.
pub const SCORE_CAP: f64 = 2.0;
/// Windows with a smaller standard deviation score 0.
pub const SIGMA_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreStage {
    RawZ,
    Clipped,
    BoundaryApplied,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreField {
    pub values: Vec<f64>,
    pub stage: ScoreStage,
}

impl ScoreField {
    pub fn new(values: Vec<f64>, stage: ScoreStage) -> Self {
        ScoreField { values, stage }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Z-score of each point's energy against the window made of the point and
/// every point within `norm_radius`, using the population deviation.
pub fn local_zscore(energy: &EnergyField, index: &SpatialIndex<'_>, norm_radius: f64) -> Result<ScoreField> {
    local_zscore_with(Execution::default(), energy, index, norm_radius)
}

pub fn local_zscore_with(
    exec: Execution,
    energy: &EnergyField,
    index: &SpatialIndex<'_>,
    norm_radius: f64,
) -> Result<ScoreField> {
    if !(norm_radius > 0.0 && norm_radius.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "normalization radius must be positive, got {norm_radius}"
        )));
    }
    let n = index.cloud().len();
    if energy.len() != n {
        return Err(Error::LengthMismatch { left: energy.len(), right: n });
    }
    let e = &energy.values;
    let values = par::map_indices(exec, n, |i| {
        let window = index.radius_neighbors(i, norm_radius);
        let count = (window.len() + 1) as f64;
        let mean = (e[i] + window.iter().map(|&j| e[j]).sum::<f64>()) / count;
        let var = ((e[i] - mean).powi(2) + window.iter().map(|&j| (e[j] - mean).powi(2)).sum::<f64>()) / count;
        let sigma = var.sqrt();
        if sigma < SIGMA_GUARD {
            0.0
        } else {
            (e[i] - mean) / sigma
        }
    });
    Ok(ScoreField::new(values, ScoreStage::RawZ))
}

/// `min(max(0, x), 2)` elementwise.
pub fn clipped_relu(scores: &ScoreField) -> ScoreField {
    ScoreField::new(
        scores.values.iter().map(|&x| x.clamp(0.0, SCORE_CAP)).collect(),
        ScoreStage::Clipped,
    )
}

/// Overwrite boundary points, and their graph neighbors when
/// `include_neighbors` is set, with [`BOUNDARY_SCORE`].
pub fn apply_boundary_condition(
    scores: &ScoreField,
    boundary: &BTreeSet<usize>,
    graph: &RecurrenceGraph,
    include_neighbors: bool,
) -> ScoreField {
    let mut values = scores.values.clone();
    for &b in boundary {
        values[b] = BOUNDARY_SCORE;
        if include_neighbors {
            for &j in graph.neighbors(b) {
                values[j] = BOUNDARY_SCORE;
            }
        }
    }
    ScoreField::new(values, ScoreStage::BoundaryApplied)
}
