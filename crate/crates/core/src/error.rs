use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid edge ({x}, {y}) for a network of {n} nodes")]
    InvalidEdge { x: usize, y: usize, n: usize },

    #[error("invalid topology: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    /// Errors caused by user input rather than by the computation itself.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidEdge { .. }
                | Error::InvalidSpec(_)
                | Error::Config(_)
                | Error::Shape(_)
                | Error::Parse { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
