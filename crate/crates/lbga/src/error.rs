use std::path::PathBuf;

use thiserror::Error;

/// Errors reported by graph construction, configuration, metrics, and I/O.
///
/// Precondition violations on hot-path accessors (out-of-range vertex ids
/// and the like) panic instead; see the individual methods.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex count mismatch: expected {expected}, found {found}")]
    VertexCountMismatch { expected: usize, found: usize },

    #[error("vertex id {vertex} out of range for {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("edge probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("modularity is undefined on a graph with no edges")]
    EmptyGraph,

    #[error("clusterings disagree on vertex count: {a} vs {b}")]
    ClusteringMismatch { a: usize, b: usize },

    #[error("result graph has edge ({u}, {v}) that is absent from the union")]
    NotInUnion { u: usize, v: usize },

    #[error("unknown dataset preset '{0}' (known: {1})")]
    UnknownPreset(String, String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{context} ({}): {source}", path.display())]
    Io {
        context: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: &'static str, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context,
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
