//! Uniform-grid radius search.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};
use crate::par::{self, Execution};

type CellKey = (i64, i64, i64);

/// Bucket grid over a borrowed cloud. Built once, then queried from any
/// number of threads.
#[derive(Debug, Clone)]
pub struct SpatialIndex<'a> {
    cloud: &'a PointCloud,
    origin: Point3,
    cell: f64,
    cells: HashMap<CellKey, Vec<usize>>,
}

impl<'a> SpatialIndex<'a> {
    /// Cell size is chosen so that a volumetric cloud gets roughly one point
    /// per cell.
    pub fn new(cloud: &'a PointCloud) -> Self {
        let (lo, hi) = cloud.bounds();
        let extent = (hi - lo).max_component();
        let cell = if extent > 0.0 {
            extent / (cloud.len() as f64).cbrt().max(1.0)
        } else {
            1.0
        };
        Self::with_cell_size(cloud, cell)
    }

    pub fn with_cell_size(cloud: &'a PointCloud, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let (origin, _) = cloud.bounds();
        let mut cells: HashMap<CellKey, Vec<usize>> = HashMap::new();
        for (i, &p) in cloud.points().iter().enumerate() {
            cells.entry(key_of(origin, cell, p)).or_default().push(i);
        }
        SpatialIndex { cloud, origin, cell, cells }
    }

    pub fn cloud(&self) -> &'a PointCloud {
        self.cloud
    }

    pub fn cell_size(&self) -> f64 {
        self.cell
    }

    /// All `j != i` with `|v_j - v_i| < r`, ascending.
    pub fn radius_neighbors(&self, i: usize, r: f64) -> Vec<usize> {
        let center = self.cloud.get(i);
        let mut out = Vec::new();
        self.visit_ball(center, r, |j, _| {
            if j != i {
                out.push(j);
            }
        });
        out.sort_unstable();
        out
    }

    /// All points with `|v_j - q| < r`, ascending, for an arbitrary query.
    pub fn points_within(&self, q: Point3, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.visit_ball(q, r, |j, _| out.push(j));
        out.sort_unstable();
        out
    }

    /// Nearest other point of `i` and its distance; `None` for a 1-point cloud.
    pub fn nearest(&self, i: usize) -> Option<(usize, f64)> {
        if self.cloud.len() < 2 {
            return None;
        }
        let center = self.cloud.get(i);
        let mut r = self.cell;
        loop {
            let mut best: Option<(usize, f64)> = None;
            self.visit_ball(center, r, |j, d2| {
                if j != i && best.is_none_or(|(bj, bd2)| d2 < bd2 || (d2 == bd2 && j < bj)) {
                    best = Some((j, d2));
                }
            });
            if let Some((j, d2)) = best {
                return Some((j, d2.sqrt()));
            }
            r *= 2.0;
        }
    }

    fn visit_ball(&self, q: Point3, r: f64, mut visit: impl FnMut(usize, f64)) {
        if !(r > 0.0) {
            return;
        }
        let r2 = r * r;
        let lo = key_of(self.origin, self.cell, q - Point3::splat(r));
        let hi = key_of(self.origin, self.cell, q + Point3::splat(r));
        let span = |a: i64, b: i64| (b - a + 1) as f64;
        let n_cells = span(lo.0, hi.0) * span(lo.1, hi.1) * span(lo.2, hi.2);
        let points = self.cloud.points();
        if n_cells > self.cells.len() as f64 {
            // ball larger than the occupied grid: a flat scan is cheaper
            for (j, &p) in points.iter().enumerate() {
                let d2 = p.distance_squared(q);
                if d2 < r2 {
                    visit(j, d2);
                }
            }
            return;
        }
        for cx in lo.0..=hi.0 {
            for cy in lo.1..=hi.1 {
                for cz in lo.2..=hi.2 {
                    if let Some(bucket) = self.cells.get(&(cx, cy, cz)) {
                        for &j in bucket {
                            let d2 = points[j].distance_squared(q);
                            if d2 < r2 {
                                visit(j, d2);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn key_of(origin: Point3, cell: f64, p: Point3) -> CellKey {
    let rel = (p - origin) / cell;
    (rel.x.floor() as i64, rel.y.floor() as i64, rel.z.floor() as i64)
}

/// Mean over all points of the distance to the nearest other point.
pub fn mean_nn_distance(cloud: &PointCloud) -> Result<f64> {
    mean_nn_distance_with(Execution::default(), &SpatialIndex::new(cloud))
}

pub fn mean_nn_distance_with(exec: Execution, index: &SpatialIndex<'_>) -> Result<f64> {
    let n = index.cloud().len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let dists = par::map_indices(exec, n, |i| index.nearest(i).map_or(0.0, |(_, d)| d));
    Ok(dists.iter().sum::<f64>() / n as f64)
}
