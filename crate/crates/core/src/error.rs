use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("parameter {t} outside the clamped domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error(
        "underdetermined fit: {frames} frames cannot determine {controls} control points without regularization (mu must be > 0)"
    )]
    Underdetermined { frames: usize, controls: usize },

    #[error("regularized Gram matrix is not positive definite (T={frames}, k={controls}, mu={mu})")]
    NotPositiveDefinite { frames: usize, controls: usize, mu: f64 },

    #[error("transport {fine}x{coarse} is ill-conditioned (condition number {condition:e})")]
    IllConditioned { fine: usize, coarse: usize, condition: f64 },

    #[error("non-finite value at flat index {0}")]
    NonFinite(usize),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("archive {path}: {message}")]
    Archive { path: PathBuf, message: String },

    #[error("mesh sequence: {0}")]
    Mesh(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn archive(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Archive {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerical core (as opposed to bad input data).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Underdetermined { .. } | Error::NotPositiveDefinite { .. } | Error::IllConditioned { .. }
        )
    }
}
