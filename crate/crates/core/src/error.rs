use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid shape mismatch")]
    ShapeMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("covariance matrix is not positive semi-definite (most negative eigenvalue ~ {min_eigenvalue:.3e})")]
    Indefinite { min_eigenvalue: f64 },

    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },

    #[error("population cap {cap} exceeded at epoch {epoch} ({count} particles)")]
    PopulationCap { cap: usize, epoch: usize, count: usize },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("singular evaluation: {0}")]
    Singular(&'static str),

    #[error("regime violation: potential {potential} must be below 1")]
    RegimeViolation { potential: f64 },

    #[error("kernel has no {0} form")]
    UnsupportedKernel(&'static str),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
