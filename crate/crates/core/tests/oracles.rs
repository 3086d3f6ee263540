//! Library results checked against independent brute-force reimplementations.

use std::collections::BTreeSet;

use forcerank::dynamics::{compute_forces, energy_field, ForceParams, SignConvention};
use forcerank::eval::{auroc, confusion, prf, ConfusionCounts};
use forcerank::graph::build_recurrence_graph;
use forcerank::ranking::{classify, percent_quota, select_seeds};
use forcerank::scoring::{local_zscore, ScoreField, ScoreStage};
use forcerank::spatial::{mean_nn_distance, SpatialIndex};
use forcerank::{Point3, PointCloud};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cloud(rng: &mut ChaCha8Rng, n: usize, extent: f64) -> PointCloud {
    let pts = (0..n)
        .map(|_| Point3::new(rng.random::<f64>() * extent, rng.random::<f64>() * extent, rng.random::<f64>() * extent))
        .collect();
    PointCloud::new(pts).unwrap()
}

fn naive_forces(points: &[Point3], xi: f64, c: f64, k: f64, p: f64) -> Vec<[f64; 3]> {
    let n = points.len();
    let mut out = vec![[0.0; 3]; n];
    for i in 0..n {
        let mut rep = [0.0; 3];
        let mut att = [0.0; 3];
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = [points[i].x - points[j].x, points[i].y - points[j].y, points[i].z - points[j].z];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            let coef = -c * k.powf(p + 1.0) / r.powf(p);
            for a in 0..3 {
                rep[a] += coef * d[a];
            }
            if r < xi {
                for a in 0..3 {
                    att[a] += r / k * d[a];
                }
            }
        }
        for a in 0..3 {
            out[i][a] = rep[a] + att[a];
        }
    }
    out
}

#[test]
fn forces_match_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for trial in 0..4 {
        let cloud = random_cloud(&mut rng, 1000, 20.0);
        let p = [2.0, 1.5, 3.0, 2.5][trial];
        let (c, k, xi) = (rng.random_range(0.05..1.0), rng.random_range(0.5..2.0), rng.random_range(1.0..4.0));
        let graph = build_recurrence_graph(&SpatialIndex::new(&cloud), xi).unwrap();
        let params = ForceParams::new(c, k, p, 0.1).unwrap().with_sign(SignConvention::Reversed);
        let got = compute_forces(&cloud, &graph, &params).unwrap();
        let want = naive_forces(cloud.points(), xi, c, k, p);
        let classical = compute_forces(&cloud, &graph, &params.with_sign(SignConvention::Classical)).unwrap();
        for i in 0..cloud.len() {
            let f = got.get(i).to_array();
            let g = classical.get(i).to_array();
            for a in 0..3 {
                assert!((f[a] - want[i][a]).abs() <= 1e-10, "trial {trial} point {i} axis {a}");
                assert_eq!(g[a], -f[a]);
            }
        }
    }
}

#[test]
fn graph_matches_dense_adjacency() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let cloud = random_cloud(&mut rng, 300, 10.0);
        let xi = rng.random_range(0.5..3.0);
        let graph = build_recurrence_graph(&SpatialIndex::new(&cloud), xi).unwrap();
        for i in 0..cloud.len() {
            let dense: Vec<usize> =
                (0..cloud.len()).filter(|&j| j != i && cloud.get(i).distance(cloud.get(j)) < xi).collect();
            assert_eq!(graph.neighbors(i), dense.as_slice());
        }
    }
}

#[test]
fn mean_nn_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cloud = random_cloud(&mut rng, 400, 10.0);
    let brute = (0..cloud.len())
        .map(|i| {
            (0..cloud.len())
                .filter(|&j| j != i)
                .map(|j| cloud.get(i).distance(cloud.get(j)))
                .fold(f64::INFINITY, f64::min)
        })
        .sum::<f64>()
        / cloud.len() as f64;
    assert!((mean_nn_distance(&cloud).unwrap() - brute).abs() < 1e-12);
}

#[test]
fn energy_total_is_sum_of_squared_norms() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cloud = random_cloud(&mut rng, 500, 10.0);
    let graph = build_recurrence_graph(&SpatialIndex::new(&cloud), 1.5).unwrap();
    let forces = compute_forces(&cloud, &graph, &ForceParams::new(0.2, 1.0, 2.0, 0.1).unwrap()).unwrap();
    let e = energy_field(&forces);
    let mut total = 0.0;
    for i in 0..cloud.len() {
        let f = forces.get(i);
        let sq = f.x * f.x + f.y * f.y + f.z * f.z;
        assert!((e.values[i] - sq).abs() <= 1e-12 * sq.max(1.0));
        assert!(e.values[i] >= 0.0);
        total += sq;
    }
    assert!((e.total - total).abs() <= 1e-9 * total);
}

#[cfg(feature = "parallel")]
#[test]
fn parallel_forces_are_bitwise_sequential() {
    use forcerank::dynamics::compute_forces_with;
    use forcerank::Execution;

    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cloud = random_cloud(&mut rng, 800, 10.0);
    let graph = build_recurrence_graph(&SpatialIndex::new(&cloud), 1.5).unwrap();
    let params = ForceParams::new(0.2, 1.0, 2.0, 0.1).unwrap();
    let seq = compute_forces_with(Execution::Sequential, &cloud, &graph, &params).unwrap();
    let par = compute_forces_with(Execution::Parallel, &cloud, &graph, &params).unwrap();
    assert_eq!(seq, par);
    let again = compute_forces_with(Execution::Parallel, &cloud, &graph, &params).unwrap();
    assert_eq!(par, again);
}

#[test]
fn forces_are_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cloud = random_cloud(&mut rng, 400, 10.0);
    let shift = Point3::new(123.25, -40.5, 7.75);
    let moved = PointCloud::new(cloud.points().iter().map(|&p| p + shift).collect()).unwrap();
    let params = ForceParams::new(0.2, 1.0, 2.0, 0.1).unwrap();
    let g1 = build_recurrence_graph(&SpatialIndex::new(&cloud), 1.5).unwrap();
    let g2 = build_recurrence_graph(&SpatialIndex::new(&moved), 1.5).unwrap();
    assert_eq!(g1, g2);
    let f1 = compute_forces(&cloud, &g1, &params).unwrap();
    let f2 = compute_forces(&moved, &g2, &params).unwrap();
    for i in 0..cloud.len() {
        assert!((f1.get(i) - f2.get(i)).norm() <= 1e-9);
    }
}

#[test]
fn seeds_match_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        let n = rng.random_range(1..400);
        // coarse values so that ties occur
        let values: Vec<f64> = (0..n).map(|_| (rng.random_range(0..9) as f64) / 4.0).collect();
        let gamma = rng.random_range(0.01..60.0);
        let mut order: Vec<(f64, usize)> = values.iter().copied().zip(0..).collect();
        order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let quota = (gamma / 100.0 * n as f64 - 1e-9).ceil() as usize;
        assert_eq!(percent_quota(gamma, n), quota.min(n));
        let want: BTreeSet<usize> = order.iter().take(quota).filter(|(v, _)| *v > 0.0).map(|&(_, i)| i).collect();
        let scores = ScoreField::new(values, ScoreStage::Clipped);
        assert_eq!(select_seeds(&scores, gamma), want);
    }
}

#[test]
fn classify_matches_full_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let n = rng.random_range(1..300);
        let d: Vec<f64> = (0..n).map(|_| (rng.random_range(0..12) as f64) / 8.0).collect();
        let (delta, tau) = (rng.random_range(0.5..100.0), rng.random_range(0.0..1.5));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap().then(a.cmp(&b)));
        let mut want = vec![0u8; n];
        for &i in order.iter().take(percent_quota(delta, n)) {
            want[i] = u8::from(d[i] > tau);
        }
        assert_eq!(classify(&d, delta, tau), want);
    }
}

#[test]
fn zscore_matches_brute_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let cloud = random_cloud(&mut rng, 300, 8.0);
    let values: Vec<f64> = (0..cloud.len()).map(|_| rng.random::<f64>() * 10.0).collect();
    let energy = forcerank::dynamics::EnergyField { total: values.iter().sum(), values: values.clone() };
    let r = 2.0;
    let got = local_zscore(&energy, &SpatialIndex::new(&cloud), r).unwrap();
    for i in 0..cloud.len() {
        let window: Vec<f64> = (0..cloud.len())
            .filter(|&j| j == i || cloud.get(i).distance(cloud.get(j)) < r)
            .map(|j| values[j])
            .collect();
        let m = window.iter().sum::<f64>() / window.len() as f64;
        let s = (window.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / window.len() as f64).sqrt();
        let want = if s < 1e-12 { 0.0 } else { (values[i] - m) / s };
        assert!((got.values[i] - want).abs() < 1e-9, "point {i}");
    }
}

/// Area under the ROC polyline traced by sweeping the threshold over every
/// distinct score, highest first.
fn trapezoid_auroc(scores: &[f64], truth: &[u8]) -> f64 {
    let mut thresholds: Vec<f64> = scores.to_vec();
    thresholds.sort_by(|a, b| b.partial_cmp(a).unwrap());
    thresholds.dedup();
    let pos = truth.iter().filter(|&&t| t == 1).count() as f64;
    let neg = truth.len() as f64 - pos;
    let (mut fpr0, mut tpr0, mut area) = (0.0, 0.0, 0.0);
    for t in thresholds {
        let tp = scores.iter().zip(truth).filter(|(&s, &l)| s >= t && l == 1).count() as f64;
        let fp = scores.iter().zip(truth).filter(|(&s, &l)| s >= t && l == 0).count() as f64;
        let (fpr, tpr) = (fp / neg, tp / pos);
        area += (fpr - fpr0) * (tpr + tpr0) / 2.0;
        fpr0 = fpr;
        tpr0 = tpr;
    }
    area
}

#[test]
fn auroc_matches_trapezoid_sweep() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..100 {
        let n = rng.random_range(2..200);
        let mut truth: Vec<u8> = (0..n).map(|_| u8::from(rng.random::<f64>() < 0.3)).collect();
        truth[0] = 1;
        truth[1] = 0;
        let scores: Vec<f64> = (0..n).map(|_| (rng.random_range(0..20) as f64) / 7.0).collect();
        let got = auroc(&scores, &truth).unwrap();
        assert!((got - trapezoid_auroc(&scores, &truth)).abs() < 1e-9);
    }
}

#[test]
fn confusion_matches_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..20 {
        let n = rng.random_range(1..500);
        let pred: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let truth: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let c = confusion(&pred, &truth).unwrap();
        let count = |p: u8, t: u8| pred.iter().zip(&truth).filter(|&(&a, &b)| a == p && b == t).count();
        assert_eq!(c, ConfusionCounts { tp: count(1, 1), fp: count(1, 0), tn: count(0, 0), fn_: count(0, 1) });
        assert_eq!(c.total(), n);
    }
}

#[test]
fn f1_from_precision_and_recall() {
    let (p0, r0) = (0.9867, 0.7171);
    assert!((forcerank::eval::f1_score(p0, r0) - 2.0 / (1.0 / p0 + 1.0 / r0)).abs() < 1e-15);
    let (p, r, f) = prf(&ConfusionCounts { tp: 74, fp: 1, tn: 9896, fn_: 29 });
    assert!((p - 74.0 / 75.0).abs() < 1e-15);
    assert!((r - 74.0 / 103.0).abs() < 1e-15);
    assert!((f - 2.0 * 74.0 / (2.0 * 74.0 + 1.0 + 29.0)).abs() < 1e-12);
}
