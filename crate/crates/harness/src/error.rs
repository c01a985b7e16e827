use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration field is missing or invalid.
    #[error("invalid config field `{field}`: {message}")]
    Config { field: &'static str, message: String },

    #[error(transparent)]
    Estimator(#[from] ordsum::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed result or reference file.
    #[error("{0}")]
    Format(String),

    #[error("{failed} of {total} cells outside tolerance")]
    Verification { failed: usize, total: usize },
}

impl HarnessError {
    pub fn config(field: &'static str, message: impl Into<String>) -> Self {
        Self::Config {
            field,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for validation, 2 for numerical failures, 3 for verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Estimator(ordsum::Error::Numerical(_))
            | Self::Estimator(ordsum::Error::IterationCap(_))
            | Self::Estimator(ordsum::Error::Bracket { .. }) => 2,
            Self::Verification { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
