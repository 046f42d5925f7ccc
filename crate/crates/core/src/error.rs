use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed input line. `line` is 1-based.
    #[error("line {line}: {message}")]
    Ingest { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    /// Structural problem in an ontology (cycle, dangling `is_a`, ...).
    #[error("ontology structure error: {0}")]
    Structure(String),

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("item accessions not found in the ontology: {}", .0.join(", "))]
    Mapping(Vec<String>),

    /// A persisted artifact was produced under a different configuration.
    #[error("provenance mismatch: {0}")]
    Provenance(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn ingest(line: usize, message: impl Into<String>) -> Self {
        Error::Ingest {
            line,
            message: message.into(),
        }
    }
}
