use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("invalid character table: {0}")]
    InvalidCharacter(String),

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("curve {0} has no root number")]
    MissingRootNumber(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("leading coefficient vanishes on the fiber at x={x}, y={y}")]
    FiberDegeneracy { x: String, y: String },

    #[error("quadrature budget exceeded: best estimate {best} with error {error}")]
    BudgetExceeded { best: f64, error: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("phase unwrap failed: total/2pi is {0} away from an integer")]
    UnwrapFailure(f64),

    #[error("zero or pole too close to the path: {0}")]
    PoleProximity(String),

    #[error("excluded point on the integration path: {0}")]
    ExcludedPointOnPath(String),

    #[error("missing valuation of {function} at {point}")]
    MissingValuation { point: String, function: String },

    #[error("incompatible embedding data: {0}")]
    IncompatibleEmbeddings(String),

    #[error("missing registry entry: {0}")]
    MissingEntry(String),

    #[error("non-cyclotomic factor: {0}")]
    NonCyclotomic(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
