use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}:{line}: {message}", path.display())]
    Config { path: PathBuf, line: usize, message: String },

    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, line: Option<usize>, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Data(#[from] forcerank::Error),

    #[error("{violations} of {checked} points violate the force bound")]
    TheoremViolated { violations: usize, checked: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            CliError::Parse { .. } | CliError::Io { .. } | CliError::Data(_) => 2,
            CliError::TheoremViolated { .. } => 3,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub(crate) fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        let message = format!("line {line}: {}", message.into());
        CliError::Parse { path: path.to_path_buf(), line: Some(line), message }
    }

    pub(crate) fn parse_file(path: &Path, message: impl Into<String>) -> Self {
        CliError::Parse { path: path.to_path_buf(), line: None, message: message.into() }
    }
}
