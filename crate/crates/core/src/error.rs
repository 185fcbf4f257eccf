use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected}, got {actual}")]
    Size { expected: usize, actual: usize },

    #[error("invalid frame configuration: {0}")]
    Frame(String),

    #[error("invalid channel parameters: {0}")]
    Channel(String),

    #[error("grid row {row} lies in the zero padding but holds non-zero symbols")]
    NonZeroPadding { row: usize },

    #[error("malformed alist at line {line}: {msg}")]
    Alist { line: usize, msg: String },

    #[error("invalid LDPC code: {0}")]
    Code(String),

    #[error("invalid analysis input: {0}")]
    Analysis(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
