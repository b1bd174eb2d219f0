use std::path::PathBuf;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A tensor or matrix was constructed or used with unusable dimensions.
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    /// Two operands that must share a shape do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A scalar parameter is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Values left the numerical domain (NaN, infinity, failed factorization).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The solver state went non-finite mid-run.
    #[error("non-finite {variable} at iteration {iteration}")]
    NonFiniteState {
        iteration: usize,
        variable: &'static str,
        /// Per-iteration diagnostics recorded before the failure.
        diagnostics: Vec<crate::solver::IterationStats>,
    },

    /// File or directory level I/O failure; the cause chains via `source`.
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An image file could not be decoded or encoded.
    #[error("image error on {path}: {message}")]
    Image { path: PathBuf, message: String },

    /// Input data violates a format contract (bad magic, mixed frame sizes, ...).
    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn image(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Image { path: path.into(), message: message.into() }
    }
}
