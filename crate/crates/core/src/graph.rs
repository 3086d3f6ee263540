//! Radius (recurrence) graph over a point cloud.

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::par::{self, Execution};
use crate::spatial::{mean_nn_distance_with, SpatialIndex};

/// Undirected graph with an edge between every pair of distinct points
/// strictly closer than `xi`. Stored as sorted neighbor lists.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceGraph {
    neighbors: Vec<Vec<usize>>,
    xi: f64,
}

impl RecurrenceGraph {
    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

pub fn build_recurrence_graph(index: &SpatialIndex<'_>, xi: f64) -> Result<RecurrenceGraph> {
    build_recurrence_graph_with(Execution::default(), index, xi)
}

pub fn build_recurrence_graph_with(
    exec: Execution,
    index: &SpatialIndex<'_>,
    xi: f64,
) -> Result<RecurrenceGraph> {
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(Error::InvalidParameter(format!("graph radius must be positive, got {xi}")));
    }
    let n = index.cloud().len();
    let neighbors = par::map_indices(exec, n, |i| index.radius_neighbors(i, xi));
    Ok(RecurrenceGraph { neighbors, xi })
}

/// `multiplier` times the mean nearest-neighbor distance.
pub fn select_radius(cloud: &PointCloud, multiplier: f64) -> Result<f64> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius multiplier must be positive, got {multiplier}"
        )));
    }
    let index = SpatialIndex::new(cloud);
    Ok(multiplier * mean_nn_distance_with(Execution::default(), &index)?)
}
