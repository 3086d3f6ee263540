//! Farthest point sampling and cube rescaling.

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud, Transform};

/// Result of [`fps_downsample`]: the sampled cloud in visitation order, and
/// for each sampled point the index it had in the input.
#[derive(Debug, Clone, PartialEq)]
pub struct Downsampled {
    pub cloud: PointCloud,
    pub source_indices: Vec<usize>,
}

/// Greedy farthest point sampling starting from `start_index`.
///
/// Each step picks the unselected point whose distance to the selected set is
/// largest; equal distances go to the lowest input index.
pub fn fps_downsample(cloud: &PointCloud, target: usize, start_index: usize) -> Result<Downsampled> {
    let n = cloud.len();
    if target == 0 {
        return Err(Error::InvalidParameter("FPS target must be at least 1".into()));
    }
    if target > n {
        return Err(Error::TargetExceedsCloud { target, len: n });
    }
    if start_index >= n {
        return Err(Error::InvalidParameter(format!(
            "FPS start index {start_index} out of range for {n} points"
        )));
    }

    let points = cloud.points();
    let mut min_d2 = vec![f64::INFINITY; n];
    let mut selected = vec![false; n];
    let mut order = Vec::with_capacity(target);

    let mut current = start_index;
    loop {
        selected[current] = true;
        order.push(current);
        if order.len() == target {
            break;
        }
        let c = points[current];
        let mut best = usize::MAX;
        let mut best_d2 = f64::NEG_INFINITY;
        for j in 0..n {
            if selected[j] {
                continue;
            }
            let d2 = points[j].distance_squared(c);
            if d2 < min_d2[j] {
                min_d2[j] = d2;
            }
            // strict: the first (lowest) index keeps a tie
            if min_d2[j] > best_d2 {
                best_d2 = min_d2[j];
                best = j;
            }
        }
        current = best;
    }

    Ok(Downsampled { cloud: cloud.subset(&order), source_indices: order })
}

/// Uniformly rescale so the longest bounding-box extent equals `edge`, with
/// the box center moved to `(edge/2, edge/2, edge/2)`.
pub fn rescale_to_cube(cloud: &PointCloud, edge: f64) -> Result<(PointCloud, Transform)> {
    if !(edge > 0.0 && edge.is_finite()) {
        return Err(Error::InvalidParameter(format!("cube edge must be positive, got {edge}")));
    }
    if cloud.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: cloud.len() });
    }
    let (lo, hi) = cloud.bounds();
    let extent = (hi - lo).max_component();
    if !(extent > 0.0) {
        return Err(Error::ZeroExtent);
    }
    let scale = edge / extent;
    let center = (lo + hi) * 0.5;
    let translation = Point3::splat(edge * 0.5) - center * scale;
    let transform = Transform::new(translation, scale)?;
    Ok((transform.apply_cloud(cloud), transform))
}
