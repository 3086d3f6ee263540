//! Synthetic closed surfaces with conical protrusions and ground truth.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    Cube,
    Tetrahedron,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Cube => "cube",
            Shape::Tetrahedron => "tetrahedron",
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cube" => Ok(Shape::Cube),
            "tetrahedron" | "tetra" | "pyramid" => Ok(Shape::Tetrahedron),
            other => Err(Error::InvalidParameter(format!("unknown shape {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub shape: Shape,
    pub edge: f64,
    pub cone_radius: f64,
    pub cone_height: f64,
    pub cone_count: usize,
    /// Expected points per unit area, before noise.
    pub surface_density: f64,
    /// Per-axis variance of the additive Gaussian noise.
    pub noise_variance: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            shape: Shape::Cube,
            edge: 64.0,
            cone_radius: 4.0,
            cone_height: 10.0,
            cone_count: 4,
            surface_density: 2.0,
            noise_variance: 0.1,
            rng_seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("edge", self.edge),
            ("cone_radius", self.cone_radius),
            ("cone_height", self.cone_height),
            ("surface_density", self.surface_density),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.cone_radius >= self.edge / 2.0 {
            return Err(Error::InvalidParameter("cone_radius must be below edge / 2".into()));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidParameter("noise_variance must be non-negative".into()));
        }
        Ok(())
    }

    /// Surface area of the shape without protrusions.
    pub fn base_area(&self) -> f64 {
        let l = self.edge;
        match self.shape {
            Shape::Cube => 6.0 * l * l,
            Shape::Tetrahedron => 3f64.sqrt() * l * l,
        }
    }

    /// The density giving about `points` samples on the shape without cones.
    pub fn with_point_count(self, points: usize) -> Self {
        SyntheticSpec { surface_density: points as f64 / self.base_area(), ..self }
    }

    /// Lateral area of one cone.
    pub fn cone_lateral_area(&self) -> f64 {
        PI * self.cone_radius * self.cone_radius.hypot(self.cone_height)
    }

    /// Expected anomalous fraction of the sampled surface.
    pub fn anomaly_area_fraction(&self) -> f64 {
        let k = self.cone_count as f64;
        let cones = k * self.cone_lateral_area();
        let disks = k * PI * self.cone_radius * self.cone_radius;
        cones / (self.base_area() - disks + cones)
    }
}

/// A cloud with per-point ground truth (1 = sampled from a protrusion).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloud {
    pub cloud: PointCloud,
    pub truth: Vec<u8>,
}

/// Where a protrusion was placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConePlacement {
    pub face: usize,
    pub center: Point3,
    pub normal: Point3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceKind {
    Square,
    Triangle,
}

/// Planar face `origin + a*u + b*v`, `(a, b)` in the unit square or the unit
/// simplex.
#[derive(Debug, Clone, Copy)]
struct Face {
    origin: Point3,
    u: Point3,
    v: Point3,
    normal: Point3,
    kind: FaceKind,
}

impl Face {
    fn area(&self) -> f64 {
        let cross = self.u.cross(self.v).norm();
        match self.kind {
            FaceKind::Square => cross,
            FaceKind::Triangle => 0.5 * cross,
        }
    }

    fn at(&self, a: f64, b: f64) -> Point3 {
        self.origin + self.u * a + self.v * b
    }

    /// Map a point of the unit square onto the face.
    fn from_unit_square(&self, a: f64, b: f64) -> Point3 {
        match self.kind {
            FaceKind::Square => self.at(a, b),
            FaceKind::Triangle if a + b > 1.0 => self.at(1.0 - a, 1.0 - b),
            FaceKind::Triangle => self.at(a, b),
        }
    }

    fn vertices(&self) -> Vec<Point3> {
        match self.kind {
            FaceKind::Square => vec![
                self.origin,
                self.origin + self.u,
                self.origin + self.u + self.v,
                self.origin + self.v,
            ],
            FaceKind::Triangle => vec![self.origin, self.origin + self.u, self.origin + self.v],
        }
    }

    /// In-plane distance from `p` to the nearest face edge.
    fn edge_distance(&self, p: Point3) -> f64 {
        let vs = self.vertices();
        (0..vs.len())
            .map(|k| segment_distance(p, vs[k], vs[(k + 1) % vs.len()]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(p: Point3, a: Point3, b: Point3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (a + ab * t).distance(p)
}

fn faces(shape: Shape, l: f64) -> Vec<Face> {
    match shape {
        Shape::Cube => {
            let mut out = Vec::with_capacity(6);
            for axis in 0..3 {
                let e = |k: usize| {
                    let mut a = [0.0; 3];
                    a[k] = l;
                    Point3::from(a)
                };
                let (n_axis, u_axis, v_axis) = (axis, (axis + 1) % 3, (axis + 2) % 3);
                for side in [0.0, 1.0] {
                    let origin = e(n_axis) * side;
                    let normal = e(n_axis) / l * if side == 0.0 { -1.0 } else { 1.0 };
                    out.push(Face { origin, u: e(u_axis), v: e(v_axis), normal, kind: FaceKind::Square });
                }
            }
            out
        }
        Shape::Tetrahedron => {
            let h = 3f64.sqrt() / 2.0;
            let verts = [
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(l, 0.0, 0.0),
                Point3::new(l / 2.0, l * h, 0.0),
                Point3::new(l / 2.0, l * h / 3.0, l * (2.0f64 / 3.0).sqrt()),
            ];
            let centroid = verts.iter().fold(Point3::ZERO, |a, &p| a + p) / 4.0;
            [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]]
                .iter()
                .map(|&[a, b, c]| {
                    let (origin, u, v) = (verts[a], verts[b] - verts[a], verts[c] - verts[a]);
                    let mut normal = u.cross(v);
                    normal = normal / normal.norm();
                    if normal.dot(origin - centroid) < 0.0 {
                        normal = -normal;
                    }
                    Face { origin, u, v, normal, kind: FaceKind::Triangle }
                })
                .collect()
        }
    }
}

/// Radical inverse of `k` in `base`.
fn halton(mut k: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while k > 0 {
        f /= base as f64;
        r += f * (k % base) as f64;
        k /= base;
    }
    r
}

const MAX_PLACEMENT_ATTEMPTS: u64 = 20_000;

/// Cone centers from a randomly rotated Halton sequence, rejecting centers
/// closer than `2r` to a face edge or closer than `3r` to another center.
fn place_cones(spec: &SyntheticSpec, faces: &[Face], rng: &mut ChaCha8Rng) -> Result<Vec<ConePlacement>> {
    let r = spec.cone_radius;
    let shift: [f64; 3] = [rng.random(), rng.random(), rng.random()];
    let mut placed: Vec<ConePlacement> = Vec::with_capacity(spec.cone_count);
    let mut k = 1u64;
    while placed.len() < spec.cone_count {
        if k > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::PlacementInfeasible(format!(
                "placed {} of {} cones without overlap",
                placed.len(),
                spec.cone_count
            )));
        }
        let h = [halton(k, 2), halton(k, 3), halton(k, 5)];
        k += 1;
        let [s0, s1, s2] = [0, 1, 2].map(|d| (h[d] + shift[d]).fract());
        let face = ((s0 * faces.len() as f64) as usize).min(faces.len() - 1);
        let center = faces[face].from_unit_square(s1, s2);
        if faces[face].edge_distance(center) < 2.0 * r {
            continue;
        }
        if placed.iter().any(|c| c.face == face && c.center.distance(center) < 3.0 * r) {
            continue;
        }
        placed.push(ConePlacement { face, center, normal: faces[face].normal });
    }
    Ok(placed)
}

fn sample_count(density: f64, area: f64) -> usize {
    (density * area).round() as usize
}

/// Generate the labeled surface described by `spec`.
pub fn make_shape(spec: &SyntheticSpec) -> Result<LabeledCloud> {
    let (labeled, _) = make_shape_with_placements(spec)?;
    Ok(labeled)
}

/// As [`make_shape`], also returning where the cones went.
pub fn make_shape_with_placements(spec: &SyntheticSpec) -> Result<(LabeledCloud, Vec<ConePlacement>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let faces = faces(spec.shape, spec.edge);
    let cones = place_cones(spec, &faces, &mut rng)?;
    let r = spec.cone_radius;

    let mut points = Vec::new();
    let mut truth = Vec::new();
    for (f, face) in faces.iter().enumerate() {
        let on_face: Vec<&ConePlacement> = cones.iter().filter(|c| c.face == f).collect();
        for _ in 0..sample_count(spec.surface_density, face.area()) {
            let p = face.from_unit_square(rng.random(), rng.random());
            if on_face.iter().any(|c| c.center.distance(p) < r) {
                continue;
            }
            points.push(p);
            truth.push(0);
        }
    }

    let slant = r.hypot(spec.cone_height);
    let per_cone = sample_count(spec.surface_density, spec.cone_lateral_area());
    for cone in &cones {
        let face = &faces[cone.face];
        let e1 = face.u / face.u.norm();
        let e2 = cone.normal.cross(e1);
        for _ in 0..per_cone {
            // area element grows linearly with distance from the apex
            let t = slant * rng.random::<f64>().sqrt();
            let theta = TAU * rng.random::<f64>();
            let rho = r * t / slant;
            let rise = spec.cone_height * (1.0 - t / slant);
            points.push(cone.center + (e1 * theta.cos() + e2 * theta.sin()) * rho + cone.normal * rise);
            truth.push(1);
        }
    }

    let mut cloud = PointCloud::new(points)?;
    cloud = add_gaussian_noise(&cloud, spec.noise_variance, noise_seed(spec.rng_seed))?;
    Ok((LabeledCloud { cloud, truth }, cones))
}

fn noise_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

/// Add independent `N(0, variance)` offsets to every coordinate.
pub fn add_gaussian_noise(cloud: &PointCloud, variance: f64, rng_seed: u64) -> Result<PointCloud> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!("noise variance must be non-negative, got {variance}")));
    }
    if variance == 0.0 {
        return Ok(cloud.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).expect("finite positive sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let points = cloud
        .points()
        .iter()
        .map(|&p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            p + Point3::new(dx, dy, dz)
        })
        .collect();
    PointCloud::new(points)
}

/// Square open patch in the `z = 0` plane, for boundary-handling checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchSpec {
    pub side: f64,
    /// Grid spacing of the jittered sampling.
    pub spacing: f64,
    /// Fraction of `spacing` by which grid samples are jittered.
    pub jitter: f64,
    /// Dent center in patch coordinates; `None` is the patch center.
    pub dent_center: Option<[f64; 2]>,
    pub dent_radius: f64,
    pub dent_depth: f64,
    pub noise_variance: f64,
    pub rng_seed: u64,
}

impl Default for PatchSpec {
    fn default() -> Self {
        PatchSpec {
            side: 64.0,
            spacing: 1.0,
            jitter: 0.3,
            dent_center: None,
            dent_radius: 6.0,
            dent_depth: 4.0,
            noise_variance: 0.0,
            rng_seed: 11,
        }
    }
}

/// Jittered-grid patch with one smooth (cosine-profile) dent.
/// Points with a depth of more than 5% of `dent_depth` carry truth 1.
pub fn make_dented_patch(spec: &PatchSpec) -> Result<LabeledCloud> {
    if !(spec.side > 0.0 && spec.spacing > 0.0 && spec.spacing < spec.side) {
        return Err(Error::InvalidParameter("patch side and spacing must be positive".into()));
    }
    if !(spec.dent_radius >= 0.0 && spec.dent_radius < spec.side / 2.0) {
        return Err(Error::InvalidParameter("dent radius must fit inside the patch".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n = (spec.side / spec.spacing).floor() as usize + 1;
    let [cx, cy] = spec.dent_center.unwrap_or([spec.side / 2.0; 2]);
    if !(0.0..=spec.side).contains(&cx) || !(0.0..=spec.side).contains(&cy) {
        return Err(Error::InvalidParameter(format!("dent center ({cx}, {cy}) lies outside the patch")));
    }
    let mut points = Vec::with_capacity(n * n);
    let mut truth = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let jx = (rng.random::<f64>() - 0.5) * spec.jitter * spec.spacing;
            let jy = (rng.random::<f64>() - 0.5) * spec.jitter * spec.spacing;
            let x = i as f64 * spec.spacing + jx;
            let y = j as f64 * spec.spacing + jy;
            let rho = (x - cx).hypot(y - cy);
            let depth = if rho < spec.dent_radius {
                0.5 * spec.dent_depth * (1.0 + (PI * rho / spec.dent_radius).cos())
            } else {
                0.0
            };
            points.push(Point3::new(x, y, -depth));
            truth.push(u8::from(depth > 0.05 * spec.dent_depth));
        }
    }
    let cloud = add_gaussian_noise(&PointCloud::new(points)?, spec.noise_variance, noise_seed(spec.rng_seed))?;
    Ok(LabeledCloud { cloud, truth })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(shape: Shape, cones: usize, noise: f64) -> SyntheticSpec {
        SyntheticSpec {
            shape,
            cone_count: cones,
            noise_variance: noise,
            surface_density: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn no_cones_means_no_truth_and_exact_surface() {
        for shape in [Shape::Cube, Shape::Tetrahedron] {
            let s = spec(shape, 0, 0.0);
            let out = make_shape(&s).unwrap();
            assert!(out.truth.iter().all(|&t| t == 0));
            let fs = faces(shape, s.edge);
            for &p in out.cloud.points() {
                let off = fs.iter().map(|f| f.normal.dot(p - f.origin).abs()).fold(f64::INFINITY, f64::min);
                assert!(off < 1e-9, "{p:?} is {off} off the surface");
            }
        }
    }

    #[test]
    fn cone_points_stay_within_the_cone() {
        for shape in [Shape::Cube, Shape::Tetrahedron] {
            let s = spec(shape, 1, 0.0);
            let (out, cones) = make_shape_with_placements(&s).unwrap();
            let cone = cones[0];
            let mut count = 0;
            for (p, &t) in out.cloud.points().iter().zip(&out.truth) {
                if t == 1 {
                    count += 1;
                    let rel = *p - cone.center;
                    let rise = rel.dot(cone.normal);
                    let lateral = (rel - cone.normal * rise).norm();
                    assert!(lateral <= s.cone_radius + 1e-9);
                    assert!(rise >= -1e-9 && rise <= s.cone_height + 1e-9);
                }
            }
            assert!(count > 0);
        }
    }

    #[test]
    fn footprint_is_removed_from_the_face() {
        let s = spec(Shape::Cube, 2, 0.0);
        let (out, cones) = make_shape_with_placements(&s).unwrap();
        for (p, &t) in out.cloud.points().iter().zip(&out.truth) {
            if t == 0 {
                for c in &cones {
                    let rel = *p - c.center;
                    let on_plane = rel.dot(c.normal).abs() < 1e-9;
                    assert!(!(on_plane && rel.norm() < s.cone_radius));
                }
            }
        }
    }

    #[test]
    fn anomaly_fraction_matches_area_ratio() {
        let s = SyntheticSpec { surface_density: 12_000.0 / (6.0 * 64.0 * 64.0), ..spec(Shape::Cube, 4, 0.1) };
        let out = make_shape(&s).unwrap();
        assert!((out.cloud.len() as f64 - 12_000.0).abs() < 300.0);
        let frac = out.truth.iter().filter(|&&t| t == 1).count() as f64 / out.truth.len() as f64;
        let expected = s.anomaly_area_fraction();
        assert!((frac - expected).abs() / expected < 0.2, "{frac} vs {expected}");
    }

    #[test]
    fn generation_is_deterministic() {
        let s = spec(Shape::Tetrahedron, 3, 0.1);
        assert_eq!(make_shape(&s).unwrap(), make_shape(&s).unwrap());
        let other = make_shape(&SyntheticSpec { rng_seed: 8, ..s }).unwrap();
        assert_ne!(make_shape(&s).unwrap().cloud, other.cloud);
    }

    #[test]
    fn too_many_cones_is_infeasible() {
        let s = SyntheticSpec { cone_radius: 10.0, ..spec(Shape::Cube, 40, 0.0) };
        assert!(matches!(make_shape(&s), Err(Error::PlacementInfeasible(_))));
    }

    #[test]
    fn zero_noise_is_identity() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]).unwrap();
        assert_eq!(add_gaussian_noise(&cloud, 0.0, 1).unwrap(), cloud);
        assert!(add_gaussian_noise(&cloud, -1.0, 1).is_err());
    }

    #[test]
    fn noise_has_the_requested_variance() {
        let cloud = PointCloud::new(vec![Point3::ZERO; 100_000]).unwrap();
        let noisy = add_gaussian_noise(&cloud, 0.1, 42).unwrap();
        assert_eq!(noisy, add_gaussian_noise(&cloud, 0.1, 42).unwrap());
        for axis in 0..3 {
            let xs: Vec<f64> = noisy.points().iter().map(|p| p[axis]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!((0.09..=0.11).contains(&var), "axis {axis}: {var}");
        }
    }

    #[test]
    fn dented_patch_labels_the_dent() {
        let out = make_dented_patch(&PatchSpec { side: 20.0, dent_radius: 4.0, ..Default::default() }).unwrap();
        let dent = out.truth.iter().filter(|&&t| t == 1).count();
        assert!(dent > 20 && dent < 60, "{dent}");
        for (p, &t) in out.cloud.points().iter().zip(&out.truth) {
            assert_eq!(t == 1, p.z < -0.2);
        }
    }
}
