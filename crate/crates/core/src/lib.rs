//! Untrained surface anomaly detection on 3D point clouds.
//!
//! A cloud is treated as a spring-electrical system over its radius graph.
//! Points whose force energy stands out from their surroundings become
//! seeds; a short relaxation of the seeds and their neighbors then separates
//! true anomalies (which move far) from noise (which barely moves).
//!
//! ```no_run
//! use forcerank::{synth, pipeline, eval};
//!
//! let sample = synth::make_shape(&synth::SyntheticSpec::default())?;
//! let run = pipeline::detect(&sample.cloud, &pipeline::DetectConfig::default())?;
//! let truth = run.align(&sample.truth);
//! let report = eval::evaluate(&run.result.labels, &run.result.scores.values, &truth)?;
//! println!("F1 = {:.4}", report.f1);
//! # Ok::<(), forcerank::Error>(())
//! ```

pub mod dynamics;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graph;
pub mod par;
pub mod pipeline;
pub mod preprocess;
pub mod ranking;
pub mod scoring;
pub mod spatial;
pub mod synth;
pub mod theory;

pub use error::{Error, Result};
pub use geometry::{Point3, PointCloud, Transform};
pub use par::Execution;
