//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use forcerank::dynamics::SignConvention;
use forcerank::eval::evaluate;
use forcerank::pipeline::{detect, resolve_physics, DetectConfig, LengthRule, SeedOrder, StepRule};
use forcerank::preprocess::{fps_downsample, rescale_to_cube};
use forcerank::synth::{make_shape_with_placements, Shape, SyntheticSpec};
use forcerank::theory::{verify_lower_bound, BOUND_TOLERANCE};
use forcerank::{Error, PointCloud};

use crate::config;
use crate::error::{CliError, Result};
use crate::io;

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// cube or tetrahedron
    #[arg(long, default_value = "cube")]
    pub shape: String,
    #[arg(long, default_value_t = 64.0)]
    pub edge: f64,
    #[arg(long, default_value_t = 4.0)]
    pub cone_radius: f64,
    #[arg(long, default_value_t = 10.0)]
    pub cone_height: f64,
    #[arg(long, default_value_t = 4)]
    pub cones: usize,
    /// Per-axis variance of the Gaussian noise.
    #[arg(long, default_value_t = 0.1)]
    pub noise_var: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Expected number of points before noise; sets the surface density.
    #[arg(long, default_value_t = 50_000, conflicts_with = "density")]
    pub points: usize,
    /// Points per unit area, instead of --points.
    #[arg(long)]
    pub density: Option<f64>,
    /// Cloud file (.ply or .xyz).
    #[arg(long, short)]
    pub output: PathBuf,
    /// Truth CSV; defaults to <output stem>.truth.csv.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Generation manifest; defaults to <output stem>.manifest.txt.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}

/// Flags that override the configuration file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Configuration file with [preprocess], [graph], [force], [scoring] and [ranking] sections.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// FPS target; 0 disables downsampling [default: 10000]
    #[arg(long)]
    pub fps: Option<usize>,
    /// Rescaling cube edge; 0 keeps input coordinates [default: 64]
    #[arg(long)]
    pub cube_edge: Option<f64>,
    /// Graph radius as a multiple of the mean nearest-neighbor distance [default: 6]
    #[arg(long)]
    pub xi: Option<f64>,
    /// Absolute graph radius, instead of --xi.
    #[arg(long, conflicts_with = "xi")]
    pub xi_absolute: Option<f64>,
    /// Repulsion scale C [default: 0.2]
    #[arg(long)]
    pub c: Option<f64>,
    /// Natural length K as a multiple of the mean nearest-neighbor distance [default: 1]
    #[arg(long)]
    pub k: Option<f64>,
    /// Repulsion exponent p [default: 2]
    #[arg(long)]
    pub p: Option<f64>,
    /// Relaxation step as a multiple of K [default: 0.1]
    #[arg(long)]
    pub step: Option<f64>,
    /// Relaxation iterations [default: 50]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Force sign convention: classical or reversed [default: classical]
    #[arg(long)]
    pub sign: Option<String>,
    /// Normalization radius as a multiple of the graph radius [default: 3]
    #[arg(long)]
    pub norm_radius: Option<f64>,
    /// Treat the surface as open and damp scores at its boundary.
    #[arg(long)]
    pub open_surface: bool,
    /// Angle gap in radians above which a point is boundary [default: pi/2]
    #[arg(long)]
    pub angle_gap: Option<f64>,
    /// Seed quota in percent of N [default: 0.03]
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Label quota in percent of N [default: 5]
    #[arg(long)]
    pub delta: Option<f64>,
    /// Displacement threshold as a multiple of the mean nearest-neighbor distance [default: 1]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Seed tie-break: raw-score or index [default: raw-score]
    #[arg(long)]
    pub seed_order: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<DetectConfig> {
        let mut c = match &self.config {
            Some(path) => config::load(path)?,
            None => DetectConfig::default(),
        };
        if let Some(t) = self.fps {
            c.preprocess.fps_target = (t > 0).then_some(t);
        }
        if let Some(e) = self.cube_edge {
            c.preprocess.cube_edge = (e != 0.0).then_some(e);
        }
        if let Some(v) = self.xi {
            c.xi = LengthRule::MeanNnMultiple(v);
        }
        if let Some(v) = self.xi_absolute {
            c.xi = LengthRule::Absolute(v);
        }
        if let Some(v) = self.c {
            c.force.c = v;
        }
        if let Some(v) = self.k {
            c.force.k = LengthRule::MeanNnMultiple(v);
        }
        if let Some(v) = self.p {
            c.force.p = v;
        }
        if let Some(v) = self.step {
            c.force.step = StepRule::KMultiple(v);
        }
        if let Some(v) = self.iterations {
            c.force.iterations = v;
        }
        if let Some(s) = &self.sign {
            c.force.sign = s.parse::<SignConvention>().map_err(usage)?;
        }
        if let Some(v) = self.norm_radius {
            c.scoring.norm_radius_multiplier = v;
        }
        if self.open_surface {
            c.scoring.boundary.enabled = true;
        }
        if let Some(v) = self.angle_gap {
            c.scoring.boundary.angle_gap_threshold = v;
        }
        if let Some(v) = self.gamma {
            c.ranking.gamma_pct = v;
        }
        if let Some(v) = self.delta {
            c.ranking.delta_pct = v;
        }
        if let Some(v) = self.tau {
            c.ranking.tau = LengthRule::MeanNnMultiple(v);
        }
        if let Some(s) = &self.seed_order {
            c.ranking.seed_order = s.parse::<SeedOrder>().map_err(usage)?;
        }
        c.validate().map_err(usage)?;
        Ok(c)
    }
}

fn usage(e: Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("cloud");
    path.with_file_name(format!("{stem}{suffix}"))
}

pub fn synth(args: &SynthArgs) -> Result<Vec<PathBuf>> {
    let shape: Shape = args.shape.parse().map_err(usage)?;
    let mut spec = SyntheticSpec {
        shape,
        edge: args.edge,
        cone_radius: args.cone_radius,
        cone_height: args.cone_height,
        cone_count: args.cones,
        noise_variance: args.noise_var,
        rng_seed: args.seed,
        ..SyntheticSpec::default()
    };
    spec = match args.density {
        Some(d) => SyntheticSpec { surface_density: d, ..spec },
        None => spec.with_point_count(args.points),
    };
    spec.validate().map_err(usage)?;
    io::CloudFormat::from_path(&args.output)?;
    let (data, placements) = make_shape_with_placements(&spec)?;

    let truth_path = args.truth.clone().unwrap_or_else(|| sibling(&args.output, ".truth.csv"));
    let manifest_path = args.manifest.clone().unwrap_or_else(|| sibling(&args.output, ".manifest.txt"));
    io::write_cloud(&args.output, &data.cloud)?;
    let rows: Vec<(usize, u8)> = data.truth.iter().copied().enumerate().collect();
    io::write_text(&truth_path, &io::labels_csv(&rows))?;

    let mut m: Vec<(String, String)> = vec![
        ("shape".into(), shape.as_str().into()),
        ("edge".into(), spec.edge.to_string()),
        ("cone_radius".into(), spec.cone_radius.to_string()),
        ("cone_height".into(), spec.cone_height.to_string()),
        ("cone_count".into(), spec.cone_count.to_string()),
        ("surface_density".into(), spec.surface_density.to_string()),
        ("noise_variance".into(), spec.noise_variance.to_string()),
        ("rng_seed".into(), spec.rng_seed.to_string()),
        ("points".into(), data.cloud.len().to_string()),
        ("anomalous_points".into(), data.truth.iter().filter(|&&t| t == 1).count().to_string()),
    ];
    for (k, pl) in placements.iter().enumerate() {
        let c = pl.center;
        m.push((format!("cone_{k}"), format!("face {} center {} {} {}", pl.face, c.x, c.y, c.z)));
    }
    io::write_text(&manifest_path, &io::kv_text(&m))?;
    Ok(vec![args.output.clone(), truth_path, manifest_path])
}

#[derive(Debug, Clone, Args)]
pub struct DetectArgs {
    /// Input cloud (.ply or .xyz).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory for labels.csv, scores.csv, heatmap.ply and manifest.txt.
    #[arg(long, short)]
    pub output_dir: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
}

pub fn detect_cmd(args: &DetectArgs) -> Result<Vec<PathBuf>> {
    let config = args.config.resolve()?;
    let cloud = io::read_cloud(&args.input)?;
    let det = detect(&cloud, &config)?;
    let r = &det.result;

    // rows in input-index order
    let mut order: Vec<usize> = (0..det.cloud.len()).collect();
    order.sort_by_key(|&k| det.source_indices[k]);
    let src = |k: usize| det.source_indices[k];
    let labels: Vec<(usize, u8)> = order.iter().map(|&k| (src(k), r.labels[k])).collect();
    let scores: Vec<(usize, f64, f64)> =
        order.iter().map(|&k| (src(k), r.scores.values[k], r.displacements[k])).collect();
    let heat = cloud.subset(&order.iter().map(|&k| src(k)).collect::<Vec<_>>());
    let colors = io::heatmap_colors(
        &order.iter().map(|&k| r.scores.values[k]).collect::<Vec<_>>(),
        &order.iter().map(|&k| r.labels[k]).collect::<Vec<_>>(),
    );

    fs::create_dir_all(&args.output_dir).map_err(|e| CliError::io(&args.output_dir, e))?;
    let out = |name: &str| args.output_dir.join(name);
    io::write_text(&out("labels.csv"), &io::labels_csv(&labels))?;
    io::write_text(&out("scores.csv"), &io::scores_csv(&scores))?;
    io::write_text(&out("heatmap.ply"), &io::ply_text(&heat, Some(&colors)))?;
    let mut manifest = vec![
        ("input".to_string(), args.input.display().to_string()),
        ("config_file".to_string(), args.config.config.as_ref().map_or("none".into(), |p| p.display().to_string())),
    ];
    manifest.extend(det.manifest.entries().iter().cloned());
    io::write_text(&out("manifest.txt"), &io::kv_text(&manifest))?;
    Ok(["labels.csv", "scores.csv", "heatmap.ply", "manifest.txt"].map(out).to_vec())
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Predicted labels CSV (index,label).
    #[arg(long)]
    pub pred: PathBuf,
    /// Scores CSV (index,score,...).
    #[arg(long)]
    pub scores: PathBuf,
    /// Truth labels CSV (index,label).
    #[arg(long)]
    pub truth: PathBuf,
    /// Metrics file; printed to stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn eval_cmd(args: &EvalArgs) -> Result<String> {
    let mut pred = io::read_labels(&args.pred)?;
    let mut scores = io::read_csv_column(&args.scores, "score")?;
    let truth = io::read_labels(&args.truth)?;
    pred.sort_by_key(|r| r.0);
    scores.sort_by_key(|r| r.0);
    let truth_of: std::collections::BTreeMap<usize, u8> = truth.into_iter().collect();

    if pred.len() != scores.len() || pred.iter().zip(&scores).any(|(a, b)| a.0 != b.0) {
        return Err(CliError::parse_file(&args.scores, "indices do not match the predictions"));
    }
    let mut t = Vec::with_capacity(pred.len());
    for &(i, _) in &pred {
        let v = truth_of
            .get(&i)
            .ok_or_else(|| CliError::parse_file(&args.truth, format!("no truth label for index {i}")))?;
        t.push(*v);
    }
    let p: Vec<u8> = pred.iter().map(|r| r.1).collect();
    let s: Vec<f64> = scores.iter().map(|r| r.1).collect();
    let report = evaluate(&p, &s, &t)?;

    let c = report.counts;
    let entries: Vec<(String, String)> = vec![
        ("points".into(), p.len().to_string()),
        ("precision".into(), report.precision.to_string()),
        ("recall".into(), report.recall.to_string()),
        ("f1".into(), report.f1.to_string()),
        ("auroc".into(), report.auroc.map_or("undefined".into(), |a| a.to_string())),
        ("tp".into(), c.tp.to_string()),
        ("fp".into(), c.fp.to_string()),
        ("tn".into(), c.tn.to_string()),
        ("fn".into(), c.fn_.to_string()),
    ];
    let text = io::kv_text(&entries);
    if let Some(path) = &args.output {
        io::write_text(path, &text)?;
    }
    Ok(text)
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Input cloud (.ply or .xyz).
    #[arg(long, short)]
    pub input: PathBuf,
    /// Report file; printed to stdout when omitted.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

/// Downsample and rescale as `detect` does.
pub fn prepare(cloud: &PointCloud, config: &DetectConfig) -> Result<(PointCloud, Vec<usize>)> {
    let (mut working, source) = match config.preprocess.fps_target {
        Some(t) if t < cloud.len() => {
            let ds = fps_downsample(cloud, t, config.preprocess.fps_start)?;
            (ds.cloud, ds.source_indices)
        }
        _ => (cloud.clone(), (0..cloud.len()).collect()),
    };
    if let Some(edge) = config.preprocess.cube_edge {
        working = rescale_to_cube(&working, edge)?.0;
    }
    Ok((working, source))
}

/// Rewrites working-cloud indices in an error to input indices.
fn remap(e: Error, source: &[usize]) -> CliError {
    let map = |i: usize| source[i];
    match e.root() {
        Error::CoincidentPoints { i, j, distance } => {
            let (a, b) = (map(*i).min(map(*j)), map(*i).max(map(*j)));
            CliError::Data(Error::CoincidentPoints { i: a, j: b, distance: *distance })
        }
        _ => CliError::Data(e),
    }
}

/// Returns the report text; a report with violations is an error carrying
/// the text in its output file.
pub fn verify_cmd(args: &VerifyArgs) -> Result<String> {
    let config = args.config.resolve()?;
    let cloud = io::read_cloud(&args.input)?;
    let (working, source) = prepare(&cloud, &config)?;
    let (graph, params) = resolve_physics(&working, &config).map_err(|e| remap(e, &source))?;
    let report = verify_lower_bound(&working, &graph, &params).map_err(|e| remap(e, &source))?;

    let worst = report.records.iter().min_by(|a, b| a.slack().total_cmp(&b.slack()));
    let entries: Vec<(String, String)> = vec![
        ("input".into(), args.input.display().to_string()),
        ("points".into(), working.len().to_string()),
        ("xi".into(), graph.xi().to_string()),
        ("C".into(), params.c.to_string()),
        ("K".into(), params.k.to_string()),
        ("p".into(), params.p.to_string()),
        ("lambda".into(), "per point, nearest graph neighbor".into()),
        ("tolerance".into(), format!("{BOUND_TOLERANCE:e}")),
        ("checked".into(), report.checked().to_string()),
        ("isolated".into(), report.isolated.len().to_string()),
        ("symmetric".into(), report.symmetric.len().to_string()),
        ("non_vacuous".into(), report.non_vacuous.to_string()),
        ("projection_violations".into(), report.projection_violations.to_string()),
        ("bound_violations".into(), report.bound_violations.to_string()),
        ("violations".into(), report.violations().to_string()),
        ("min_slack".into(), worst.map_or("none".into(), |r| r.slack().to_string())),
        ("min_slack_index".into(), worst.map_or("none".into(), |r| source[r.index].to_string())),
    ];
    let text = io::kv_text(&entries);
    if let Some(path) = &args.output {
        io::write_text(path, &text)?;
    }
    if report.violations() > 0 {
        return Err(CliError::TheoremViolated { violations: report.violations(), checked: report.checked() });
    }
    Ok(text)
}
