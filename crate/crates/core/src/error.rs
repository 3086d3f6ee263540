use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point {index} has a non-finite coordinate")]
    NonFinitePoint { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("target exceeds cloud size ({target} > {len})")]
    TargetExceedsCloud { target: usize, len: usize },

    #[error("zero extent: every point of the cloud is identical")]
    ZeroExtent,

    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("coincident points {i} and {j} (distance {distance:e})")]
    CoincidentPoints { i: usize, j: usize, distance: f64 },

    #[error("empty neighborhood at point {index}")]
    EmptyNeighborhood { index: usize },

    #[error("placement infeasible: {0}")]
    PlacementInfeasible(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("AUROC undefined: truth labels contain a single class")]
    AurocUndefined,

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with any pipeline-stage context removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
