use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown constellation `{name}` (available: {available})")]
    UnknownConstellation { name: String, available: String },

    #[error("invalid constellation `{name}`: {reason}")]
    InvalidConstellation { name: String, reason: String },

    #[error("invalid testpoints: {0}")]
    InvalidTestpoints(String),

    #[error(
        "testpoints {lo} and {hi} capture probability mass {mass:e} < {epsilon:e} under class `{class}`"
    )]
    DegenerateTestpoints {
        class: String,
        lo: String,
        hi: String,
        mass: f64,
        epsilon: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("covariance of class `{0}` is not positive definite")]
    NotPositiveDefinite(String),

    #[error("invalid priors: {0}")]
    InvalidPriors(String),

    #[error("cannot place {l} testpoints satisfying the probability-gap guard for {cell}")]
    Infeasible { l: usize, cell: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("missing models: {0}")]
    MissingModels(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
