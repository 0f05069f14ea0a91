use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: unsupported raster: {reason}")]
    UnsupportedRaster { path: PathBuf, reason: String },

    #[error("{path}: malformed {format}: {reason}")]
    Parse {
        path: PathBuf,
        format: &'static str,
        reason: String,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("graph has no nodes; embedding is undefined")]
    EmptyGraph,

    #[error("node {node} at ({row}, {col}) lies outside a {height}x{width} image")]
    CoordinateOutOfBounds {
        node: usize,
        row: usize,
        col: usize,
        height: usize,
        width: usize,
    },

    #[error("insufficient data: need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("Davies-Bouldin index needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),

    #[error("clusters `{0}` and `{1}` have coincident centroids")]
    DegenerateClusters(String, String),

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("manifest has no entry for ids: {0:?}")]
    UnmatchedIds(Vec<String>),

    #[error("no inputs")]
    NoInputs,

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, format: &'static str, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            format,
            reason: reason.into(),
        }
    }
}
