use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shapes disagree along one or more axes.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid hyperparameter, option, or model configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller violated an operation's precondition.
    #[error("contract error: {0}")]
    Contract(String),

    #[error("degenerate batch: {0}")]
    DegenerateBatch(String),

    #[error("tape already consumed by a previous backward pass")]
    ConsumedTape,

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("unknown class `{name}` (available: {})", available.join(", "))]
    UnknownClass {
        name: String,
        available: Vec<String>,
    },

    #[error("similarity undefined: {0}")]
    UndefinedSimilarity(String),

    #[error("export error: {0}")]
    Export(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("checkpoint does not match model: {0}")]
    ShapeMismatch(String),

    #[error("checkpoint truncated: {0}")]
    Truncated(String),

    #[error("non-finite loss {loss} at epoch {epoch}, batch {batch}")]
    Divergence {
        epoch: usize,
        batch: usize,
        loss: f64,
    },

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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
