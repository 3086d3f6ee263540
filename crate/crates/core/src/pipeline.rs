//! End-to-end detection: preprocess, score, rank.

use std::collections::BTreeSet;
use std::fmt::{self, Display};
use std::str::FromStr;

use crate::dynamics::{
    compute_forces, energy_field, update_positions, EnergyField, ForceParams, SignConvention,
    DEFAULT_COINCIDENCE_EPS, DEFAULT_FORCE_EPS,
};
use crate::error::{Error, Result, StageExt};
use crate::geometry::{PointCloud, Transform};
use crate::graph::{build_recurrence_graph, RecurrenceGraph};
use crate::par::Execution;
use crate::preprocess::{fps_downsample, rescale_to_cube};
use crate::ranking::{build_optimizable_set, classify, percent_quota, select_seeds, select_seeds_by, RankingParams};
use crate::scoring::{
    apply_boundary_condition, clipped_relu, detect_boundary_points, local_zscore, BoundaryParams, ScoreField,
    BOUNDARY_SCORE, SCORE_CAP, SIGMA_GUARD,
};
use crate::spatial::{mean_nn_distance_with, SpatialIndex};

/// A length given either outright or as a multiple of the mean
/// nearest-neighbor distance of the working cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LengthRule {
    MeanNnMultiple(f64),
    Absolute(f64),
}

impl LengthRule {
    pub fn resolve(self, mean_nn: f64) -> f64 {
        match self {
            LengthRule::MeanNnMultiple(m) => m * mean_nn,
            LengthRule::Absolute(v) => v,
        }
    }

    fn validate(self, name: &str, allow_zero: bool) -> Result<()> {
        let v = match self {
            LengthRule::MeanNnMultiple(v) | LengthRule::Absolute(v) => v,
        };
        let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        Ok(())
    }
}

impl Display for LengthRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LengthRule::MeanNnMultiple(m) => write!(f, "{m} x mean_nn"),
            LengthRule::Absolute(v) => write!(f, "{v}"),
        }
    }
}

/// Relaxation step length, outright or as a multiple of `K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    KMultiple(f64),
    Absolute(f64),
}

impl StepRule {
    pub fn resolve(self, k: f64) -> f64 {
        match self {
            StepRule::KMultiple(m) => m * k,
            StepRule::Absolute(v) => v,
        }
    }
}

impl Display for StepRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepRule::KMultiple(m) => write!(f, "{m} x K"),
            StepRule::Absolute(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    /// FPS target; `None` disables downsampling. Clouds already at or below
    /// the target pass through.
    pub fps_target: Option<usize>,
    pub fps_start: usize,
    /// Edge of the rescaling cube; `None` keeps input coordinates.
    pub cube_edge: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceConfig {
    pub c: f64,
    pub k: LengthRule,
    pub p: f64,
    pub step: StepRule,
    pub iterations: usize,
    pub sign: SignConvention,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringConfig {
    /// Normalization window radius as a multiple of the graph radius.
    pub norm_radius_multiplier: f64,
    pub boundary: BoundaryParams,
}

/// How seeds with equal scores are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SeedOrder {
    /// Higher unclipped z-score first, then lower index.
    #[default]
    RawScore,
    /// Lower index first.
    Index,
}

impl SeedOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            SeedOrder::RawScore => "raw-score",
            SeedOrder::Index => "index",
        }
    }
}

impl FromStr for SeedOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw-score" => Ok(SeedOrder::RawScore),
            "index" => Ok(SeedOrder::Index),
            other => Err(Error::InvalidParameter(format!("unknown seed order {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingConfig {
    pub gamma_pct: f64,
    pub delta_pct: f64,
    pub tau: LengthRule,
    pub seed_order: SeedOrder,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectConfig {
    pub preprocess: PreprocessConfig,
    pub xi: LengthRule,
    pub force: ForceConfig,
    pub scoring: ScoringConfig,
    pub ranking: RankingConfig,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            preprocess: PreprocessConfig { fps_target: Some(10_000), fps_start: 0, cube_edge: Some(64.0) },
            xi: LengthRule::MeanNnMultiple(6.0),
            force: ForceConfig {
                c: 0.2,
                k: LengthRule::MeanNnMultiple(1.0),
                p: 2.0,
                step: StepRule::KMultiple(0.1),
                iterations: 50,
                sign: SignConvention::Classical,
            },
            scoring: ScoringConfig { norm_radius_multiplier: 3.0, boundary: BoundaryParams::default() },
            ranking: RankingConfig {
                gamma_pct: 0.03, delta_pct: 5.0, tau: LengthRule::MeanNnMultiple(1.0),
                seed_order: SeedOrder::RawScore,
            },
        }
    }
}

impl DetectConfig {
    pub fn open_surface(mut self, enabled: bool) -> Self {
        self.scoring.boundary.enabled = enabled;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(0) = self.preprocess.fps_target {
            return Err(Error::InvalidParameter("fps target must be at least 1 (use None to disable)".into()));
        }
        if let Some(edge) = self.preprocess.cube_edge {
            if !(edge > 0.0 && edge.is_finite()) {
                return Err(Error::InvalidParameter(format!("cube edge must be positive, got {edge}")));
            }
        }
        self.xi.validate("xi", false)?;
        self.force.k.validate("K", false)?;
        self.ranking.tau.validate("tau", true)?;
        let m = self.scoring.norm_radius_multiplier;
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidParameter(format!("norm radius multiplier must be positive, got {m}")));
        }
        self.scoring.boundary.validate()?;
        // K and step are checked once resolved
        RankingParams { gamma_pct: self.ranking.gamma_pct, delta_pct: self.ranking.delta_pct, tau: 0.0, iterations: self.force.iterations }
            .validate()?;
        Ok(())
    }
}

/// Ordered `key = value` record of every resolved parameter of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    entries: Vec<(String, String)>,
}

impl RunManifest {
    pub fn push(&mut self, key: impl Into<String>, value: impl Display) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn extend(&mut self, other: &RunManifest) {
        self.entries.extend(other.entries.iter().cloned());
    }
}

impl Display for RunManifest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// Per-point outputs, aligned to the working (preprocessed) cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub labels: Vec<u8>,
    pub scores: ScoreField,
    pub displacements: Vec<f64>,
    pub seeds: BTreeSet<usize>,
    pub optimizable: BTreeSet<usize>,
}

/// Parameters derived from the working cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedParams {
    pub mean_nn: f64,
    pub xi: f64,
    pub norm_radius: f64,
    pub force: ForceParams,
    pub ranking: RankingParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub result: DetectionResult,
    /// The cloud the detector ran on, after downsampling and rescaling.
    pub cloud: PointCloud,
    /// Input index of each working point.
    pub source_indices: Vec<usize>,
    pub transform: Transform,
    pub energy: EnergyField,
    pub boundary: BTreeSet<usize>,
    pub params: ResolvedParams,
    pub manifest: RunManifest,
}

impl Detection {
    /// Gather an input-aligned vector onto the working cloud.
    pub fn align<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.source_indices.iter().map(|&i| input[i]).collect()
    }
}

pub fn detect(cloud: &PointCloud, config: &DetectConfig) -> Result<Detection> {
    config.validate()?;
    let mut manifest = RunManifest::default();
    manifest.push("input_points", cloud.len());

    let (mut working, source_indices) = match config.preprocess.fps_target {
        Some(target) if target < cloud.len() => {
            let ds = fps_downsample(cloud, target, config.preprocess.fps_start).stage("downsample")?;
            manifest.push("fps_target", target);
            manifest.push("fps_start", config.preprocess.fps_start);
            (ds.cloud, ds.source_indices)
        }
        other => {
            manifest.push("fps_target", other.map_or("disabled".to_string(), |t| format!("{t} (pass-through)")));
            (cloud.clone(), (0..cloud.len()).collect())
        }
    };
    let transform = match config.preprocess.cube_edge {
        Some(edge) => {
            let (scaled, t) = rescale_to_cube(&working, edge).stage("rescale")?;
            working = scaled;
            manifest.push("cube_edge", edge);
            t
        }
        None => {
            manifest.push("cube_edge", "disabled");
            Transform::IDENTITY
        }
    };
    manifest.push("rescale_scale", transform.scale);
    manifest.push(
        "rescale_translation",
        format!("{} {} {}", transform.translation.x, transform.translation.y, transform.translation.z),
    );
    manifest.push("working_points", working.len());

    let index = SpatialIndex::new(&working);
    let mean_nn = mean_nn_distance_with(Execution::default(), &index).stage("mean nearest-neighbor distance")?;
    let xi = config.xi.resolve(mean_nn);
    let k = config.force.k.resolve(mean_nn);
    let step = config.force.step.resolve(k);
    let tau = config.ranking.tau.resolve(mean_nn);
    let norm_radius = config.scoring.norm_radius_multiplier * xi;

    let mut force = ForceParams::new(config.force.c, k, config.force.p, step).stage("force parameters")?;
    force.sign = config.force.sign;
    let ranking = RankingParams {
        gamma_pct: config.ranking.gamma_pct,
        delta_pct: config.ranking.delta_pct,
        tau,
        iterations: config.force.iterations,
    };
    ranking.validate().stage("ranking parameters")?;

    manifest.push("mean_nn_distance", mean_nn);
    manifest.push("xi_rule", config.xi);
    manifest.push("xi", xi);
    manifest.push("C", force.c);
    manifest.push("K_rule", config.force.k);
    manifest.push("K", k);
    manifest.push("p", force.p);
    manifest.push("step_rule", config.force.step);
    manifest.push("step", step);
    manifest.push("iterations", ranking.iterations);
    manifest.push("sign_convention", force.sign.as_str());
    manifest.push("coincidence_eps", DEFAULT_COINCIDENCE_EPS);
    manifest.push("force_eps", DEFAULT_FORCE_EPS);
    manifest.push("norm_radius_multiplier", config.scoring.norm_radius_multiplier);
    manifest.push("norm_radius", norm_radius);
    manifest.push("sigma_guard", SIGMA_GUARD);
    manifest.push("score_cap", SCORE_CAP);
    manifest.push("open_surface", config.scoring.boundary.enabled);
    manifest.push("angle_gap_threshold", config.scoring.boundary.angle_gap_threshold);
    manifest.push("boundary_includes_neighbors", config.scoring.boundary.include_neighbors);
    manifest.push("boundary_score", BOUNDARY_SCORE);
    manifest.push("gamma_pct", ranking.gamma_pct);
    manifest.push("delta_pct", ranking.delta_pct);
    manifest.push(
        "percent_note",
        "gamma_pct and delta_pct are percentages of N (0.03 = 0.03 %, 5 = 5 %)",
    );
    manifest.push("tau_rule", config.ranking.tau);
    manifest.push("tau", tau);

    let graph = build_recurrence_graph(&index, xi).stage("graph")?;
    manifest.push("graph_edges", graph.edge_count());

    let forces = compute_forces(&working, &graph, &force).stage("forces")?;
    let energy = energy_field(&forces);
    manifest.push("total_energy", energy.total);

    let raw = local_zscore(&energy, &index, norm_radius).stage("normalization")?;
    let clipped = clipped_relu(&raw);
    let (boundary, scores) = if config.scoring.boundary.enabled {
        let b = detect_boundary_points(&working, &graph, &config.scoring.boundary).stage("boundary")?;
        let s = apply_boundary_condition(&clipped, &b, &graph, config.scoring.boundary.include_neighbors);
        (b, s)
    } else {
        (BTreeSet::new(), clipped)
    };
    manifest.push("boundary_points", boundary.len());

    let seeds = match config.ranking.seed_order {
        SeedOrder::RawScore => select_seeds_by(&scores, &raw.values, ranking.gamma_pct).stage("ranking")?,
        SeedOrder::Index => select_seeds(&scores, ranking.gamma_pct),
    };
    let optimizable = build_optimizable_set(&seeds, &graph);
    manifest.push("seed_order", config.ranking.seed_order.as_str());
    manifest.push("seed_quota", percent_quota(ranking.gamma_pct, working.len()));
    manifest.push("seeds", seeds.len());
    manifest.push("optimizable", optimizable.len());

    let relaxed = update_positions(&working, &optimizable, &graph, &force, ranking.iterations).stage("relaxation")?;
    let labels = classify(&relaxed.displacements, ranking.delta_pct, ranking.tau);
    manifest.push("label_quota", percent_quota(ranking.delta_pct, working.len()));
    manifest.push("anomalies", labels.iter().filter(|&&l| l == 1).count());

    let params = ResolvedParams { mean_nn, xi, norm_radius, force, ranking };
    Ok(Detection {
        result: DetectionResult { labels, scores, displacements: relaxed.displacements, seeds, optimizable },
        cloud: working,
        source_indices,
        transform,
        energy,
        boundary,
        params,
        manifest,
    })
}

/// Graph and force parameters for a cloud used as-is (no preprocessing),
/// resolved with the rules of `config`.
pub fn resolve_physics(cloud: &PointCloud, config: &DetectConfig) -> Result<(RecurrenceGraph, ForceParams)> {
    let index = SpatialIndex::new(cloud);
    let mean_nn = mean_nn_distance_with(Execution::default(), &index)?;
    let k = config.force.k.resolve(mean_nn);
    let mut force = ForceParams::new(config.force.c, k, config.force.p, config.force.step.resolve(k))?;
    force.sign = config.force.sign;
    let graph = build_recurrence_graph(&index, config.xi.resolve(mean_nn))?;
    Ok((graph, force))
}
