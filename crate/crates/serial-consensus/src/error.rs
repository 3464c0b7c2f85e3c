//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A size parameter is outside its admissible range (e.g. a named
    /// topology with fewer than two vehicles).
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid Laplacian: {0}")]
    InvalidLaplacian(String),

    /// A scalar argument is outside its domain (nonpositive gain, negative
    /// horizon, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Equal serial gains: the performance constant and the closed-form
    /// error expressions are undefined at p1 = p2.
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("unsupported coordinates: {0}")]
    UnsupportedCoordinates(String),

    /// An input to a closure certification failed the required class
    /// membership.
    #[error("membership precondition failed: {0}")]
    MembershipPrecondition(String),

    /// A certified-by-construction property failed to verify; indicates a
    /// bug rather than bad input.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Gains must be strictly positive finite numbers.
    pub(crate) fn ensure_positive_gain(name: &str, value: f64) -> Result<()> {
        if value.is_finite() && value > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "gain {name} must be positive, got {value}"
            )))
        }
    }

    /// True for errors that stem from user-supplied configuration rather
    /// than from numerics; drives the CLI exit code.
    pub fn is_config(&self) -> bool {
        !matches!(
            self,
            Error::NumericalFailure(_) | Error::InternalInconsistency(_)
        )
    }
}
