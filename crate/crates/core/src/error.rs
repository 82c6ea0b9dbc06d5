use thiserror::Error;

/// Errors raised while building or evaluating the Young function pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("argument {x} outside the evaluation domain [{lo}, {hi}]")]
    Range { x: f64, lo: f64, hi: f64 },

    #[error("non-finite value while integrating: {0}")]
    Domain(String),

    #[error("quadrature did not converge on [{a}, {b}] (tolerance {tol:e}, depth {depth})")]
    Quadrature { a: f64, b: f64, tol: f64, depth: u32 },

    #[error("construction failed: {0}")]
    Construction(String),

    #[error("unsupported artifact version {found} (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("corrupted artifact: {0}")]
    CorruptedTable(String),

    #[error("malformed document: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
