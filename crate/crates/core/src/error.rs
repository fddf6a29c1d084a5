use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched extents, arities or matrix orders.
    #[error("shape error: {0}")]
    Shape(String),

    /// A value outside its admissible range.
    #[error("domain error: {0}")]
    Domain(String),

    /// Normalization of a co-occurrence matrix that holds no pairs.
    #[error("empty co-occurrence matrix: no pixel pairs exist for this offset")]
    EmptyMatrix,

    /// A direction produced no pixel pairs while extracting features.
    #[error("direction {direction} with distance {distance} yields no pixel pairs")]
    NoPairs { direction: String, distance: usize },

    #[error("duplicate id `{0}`")]
    DuplicateId(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("feature schema mismatch: {0}")]
    Schema(String),

    /// A malformed input file.
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}
