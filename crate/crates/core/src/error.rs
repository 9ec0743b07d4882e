//! Error type shared by all modules.

use thiserror::Error;

/// Failure modes of the toolkit's operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// An argument is outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// Two sampled functions live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    /// A frequency band or interval leaves the Nyquist band of the grid.
    #[error("band error: {0}")]
    Band(String),
    /// An exponent triple violates its range or Hölder relation.
    #[error("exponent error: {0}")]
    Exponent(String),
    /// An operation that needs at least one interval received none.
    #[error("empty collection")]
    Empty,
    /// Interval lengths violate the standing length assumption.
    #[error("assumption violated: {0}")]
    Assumption(String),
    /// Sharp cutoffs were requested on overlapping intervals.
    #[error("intervals not disjoint: {0}")]
    Disjointness(String),
    /// A normalizing quantity vanished.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The instance exceeds a documented cost guard.
    #[error("instance too large: {0}")]
    Size(String),
    /// A precondition of a greedy algorithm failed.
    #[error("precondition failed: {0}")]
    Precondition(String),
    /// Sequence lengths do not match the collection.
    #[error("shape mismatch: {0}")]
    Shape(String),
    /// Required precomputed state (wave packets) is missing.
    #[error("missing state: {0}")]
    State(String),
    /// A quadrature integrand was not finite.
    #[error("divergent integrand: {0}")]
    Divergence(String),
    /// Reading or writing a serialized artifact failed.
    #[error("io error: {0}")]
    Io(String),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

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
