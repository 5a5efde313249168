use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("pairing error: {0}")]
    Pairing(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("grid has no foreground pixels")]
    EmptyForeground,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the file system rather than by the content.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}
