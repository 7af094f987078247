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

    #[error("parse error in {path} at line {line}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid fragment {id}: {reason}")]
    InvalidFragment { id: u64, reason: String },

    #[error("invalid drawing: {0}")]
    InvalidDrawing(String),

    #[error("invalid camera {id}: {reason}")]
    InvalidCamera { id: u64, reason: String },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("non-manifold mesh: {0}")]
    NonManifold(String),

    #[error("fragment {fragment} has no sample in front of view {view}")]
    EmptyProjection { fragment: u64, view: u64 },

    #[error("co-circularity is undefined for coincident points")]
    CoincidentPoints,

    #[error("degenerate boundary loop: {0}")]
    DegenerateLoop(String),

    #[error("boundary loop too short to quadrangulate ({0} samples)")]
    LoopTooShort(usize),

    #[error("linear solver stopped after {iterations} iterations at relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("mesh has no interior vertices")]
    NoInteriorVertices,

    #[error("hypothesis {id} cannot move from {from} to {to}")]
    InvalidTransition {
        id: u64,
        from: &'static str,
        to: &'static str,
    },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, err: serde_json::Error) -> Self {
        Error::Parse {
            path: path.into(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
