//! `key = value` run configuration with `[section]` headers.
//!
//! ```text
//! [graph]
//! xi_multiplier = 6
//!
//! [ranking]
//! delta_pct = 5
//! ```

use std::path::Path;
use std::str::FromStr;

use forcerank::dynamics::SignConvention;
use forcerank::pipeline::{DetectConfig, LengthRule, SeedOrder, StepRule};

use crate::error::{CliError, Result};

/// Every accepted key, by section, for `--help` and error messages.
pub const KEYS: &[(&str, &[&str])] = &[
    ("preprocess", &["fps_target", "fps_start", "cube_edge"]),
    ("graph", &["xi_multiplier", "xi_absolute"]),
    ("force", &["c", "k_multiplier", "k_absolute", "p", "step_multiplier", "step_absolute", "iterations", "sign"]),
    ("scoring", &["norm_radius_multiplier", "open_surface", "angle_gap_threshold", "boundary_neighbors"]),
    ("ranking", &["gamma_pct", "delta_pct", "tau_multiplier", "tau_absolute", "seed_order"]),
];

pub fn load(path: &Path) -> Result<DetectConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut config = DetectConfig::default();
    apply(&mut config, path, &text)?;
    Ok(config)
}

pub fn apply(config: &mut DetectConfig, path: &Path, text: &str) -> Result<()> {
    let mut section: Option<&str> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| CliError::Config { path: path.to_path_buf(), line: line_no, message };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            section = Some(
                KEYS.iter()
                    .map(|(s, _)| *s)
                    .find(|&s| s == name)
                    .ok_or_else(|| err(format!("unknown section [{name}]")))?,
            );
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let section = section.ok_or_else(|| err(format!("key {key:?} outside a section")))?;
        set(config, section, key, value).map_err(err)?;
    }
    Ok(())
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
}

fn flag(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("{key}: expected a boolean, got {value:?}")),
    }
}

fn set(config: &mut DetectConfig, section: &str, key: &str, value: &str) -> Result<(), String> {
    match (section, key) {
        ("preprocess", "fps_target") => {
            let t: usize = num(key, value)?;
            config.preprocess.fps_target = (t > 0).then_some(t);
        }
        ("preprocess", "fps_start") => config.preprocess.fps_start = num(key, value)?,
        ("preprocess", "cube_edge") => {
            config.preprocess.cube_edge = if value == "none" { None } else { Some(num(key, value)?) };
        }
        ("graph", "xi_multiplier") => config.xi = LengthRule::MeanNnMultiple(num(key, value)?),
        ("graph", "xi_absolute") => config.xi = LengthRule::Absolute(num(key, value)?),
        ("force", "c") => config.force.c = num(key, value)?,
        ("force", "k_multiplier") => config.force.k = LengthRule::MeanNnMultiple(num(key, value)?),
        ("force", "k_absolute") => config.force.k = LengthRule::Absolute(num(key, value)?),
        ("force", "p") => config.force.p = num(key, value)?,
        ("force", "step_multiplier") => config.force.step = StepRule::KMultiple(num(key, value)?),
        ("force", "step_absolute") => config.force.step = StepRule::Absolute(num(key, value)?),
        ("force", "iterations") => config.force.iterations = num(key, value)?,
        ("force", "sign") => config.force.sign = SignConvention::from_str(value).map_err(|e| e.to_string())?,
        ("scoring", "norm_radius_multiplier") => config.scoring.norm_radius_multiplier = num(key, value)?,
        ("scoring", "open_surface") => config.scoring.boundary.enabled = flag(key, value)?,
        ("scoring", "angle_gap_threshold") => config.scoring.boundary.angle_gap_threshold = num(key, value)?,
        ("scoring", "boundary_neighbors") => config.scoring.boundary.include_neighbors = flag(key, value)?,
        ("ranking", "gamma_pct") => config.ranking.gamma_pct = num(key, value)?,
        ("ranking", "delta_pct") => config.ranking.delta_pct = num(key, value)?,
        ("ranking", "tau_multiplier") => config.ranking.tau = LengthRule::MeanNnMultiple(num(key, value)?),
        ("ranking", "tau_absolute") => config.ranking.tau = LengthRule::Absolute(num(key, value)?),
        ("ranking", "seed_order") => config.ranking.seed_order = SeedOrder::from_str(value).map_err(|e| e.to_string())?,
        _ => return Err(format!("unknown key {key:?} in [{section}]")),
    }
    Ok(())
}
