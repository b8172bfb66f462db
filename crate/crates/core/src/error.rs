use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngnError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("vertex id {id} out of range (num_vertices = {num_vertices})")]
    VertexOutOfRange { id: u64, num_vertices: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("stage order {order} is not valid for {kind}: {reason}")]
    InvalidOrder {
        order: String,
        kind: String,
        reason: String,
    },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report serialization failed: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, EngnError>;

impl EngnError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EngnError::Io {
            path: path.into(),
            source,
        }
    }
}
