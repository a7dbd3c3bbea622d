//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation; `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: String, reason: String },

    /// Malformed input data, with a 1-based line number where applicable.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An operation that needs both classes got a cloud with at most one.
    #[error("cloud does not contain two classes: {reason}")]
    SingleClass { reason: String },

    /// Local-scale neighbor count exceeds the opposite class size.
    #[error("k = {k} exceeds the {available} points available in class {class}")]
    KTooLarge { class: u8, k: usize, available: usize },

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    /// The exact Čech oracle refuses inputs beyond its documented limits.
    #[error("oracle scale exceeded: {0}")]
    OracleScale(String),

    /// A filtration is not face-closed or orders a coface before a face.
    #[error("invalid filtration: simplex {simplex} precedes or misses its face {facet}")]
    InvalidFiltration { simplex: String, facet: String },

    /// The accuracy matrix lacks entries required by a selection report.
    #[error("missing accuracy entries for pairs: {}", .pairs.join(", "))]
    MissingAccuracy { pairs: Vec<String> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field: field.to_string(), reason: reason.into() }
    }

    /// Process exit code the CLI maps this error to: 2 for anything caused
    /// by user input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter { .. }
            | Error::Parse { .. }
            | Error::SingleClass { .. }
            | Error::KTooLarge { .. }
            | Error::IndexOutOfRange { .. }
            | Error::OracleScale(_)
            | Error::InvalidFiltration { .. }
            | Error::MissingAccuracy { .. }
            | Error::Io(_)
            | Error::Csv(_) => 2,
            Error::Json(_) => 1,
        }
    }
}
