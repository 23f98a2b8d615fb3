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

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("layer file not found: {0}")]
    MissingLayerFile(PathBuf),

    #[error("k = {k} is too large for a cloud of {n} points (need k < n)")]
    KTooLarge { k: usize, n: usize },

    #[error("too few points: need at least {needed}, have {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("runs do not belong together: {0}")]
    MixedRuns(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("empty input")]
    EmptyInput,

    #[error("{failed} of {total} resamples failed: {first}")]
    StabilityFailed {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error("layer {index}: {source}")]
    Layer {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_layer(self, index: usize) -> Self {
        Error::Layer {
            index,
            source: Box::new(self),
        }
    }

    /// True when the root cause is a filesystem failure rather than bad data.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::MissingLayerFile(_) => true,
            Error::Layer { source, .. } => source.is_io(),
            _ => false,
        }
    }
}
