use std::path::PathBuf;

use thiserror::Error;

use crate::integrate::Trajectory;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent model or integrator setup (bad coefficients, dimension mismatch).
    #[error("configuration error: {0}")]
    Config(String),

    /// An argument outside the operation's domain (shell index, grid mismatch).
    #[error("argument error: {0}")]
    Argument(String),

    /// Spec-file or flag problem; always names the offending key.
    #[error("usage error for `{key}`: {message}")]
    Usage { key: String, message: String },

    #[error(transparent)]
    Integration(#[from] IntegrationError),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn usage(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Usage {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Why an integration stopped before reaching its end time.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// The step size required for accuracy or stability fell below `dt_min`.
    Stiffness,
    /// The step budget `max_steps` was exhausted.
    StepBudget,
}

/// Integration failure. Carries the trajectory sampled up to the failure time.
#[derive(Debug, Error)]
#[error("integration stopped at t = {t} ({kind:?}, required dt = {dt_required:e})")]
pub struct IntegrationError {
    pub kind: FailureKind,
    pub t: f64,
    pub dt_required: f64,
    pub partial: Box<Trajectory>,
}
