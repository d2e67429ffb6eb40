//! Error type shared by all modules.

use thiserror::Error;

/// Unified error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated a precondition (bad probability, bad dimension, ...).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The operation needs data the input does not carry (e.g. missing label arrays).
    #[error("invalid state: {0}")]
    State(String),

    /// Not enough usable points or samples to produce a result.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A classifier output made the requested quantity undefined (zero denominator).
    #[error("degenerate classifier: {0}")]
    DegenerateClassifier(String),

    /// A computation produced a non-finite value.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Underlying I/O failure; the source carries the detail.
    #[error("i/o failure")]
    Io(#[from] std::io::Error),

    /// A file did not match the expected format or schema.
    #[error("malformed input: {0}")]
    Format(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
