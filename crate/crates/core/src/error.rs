use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dangling reference: {kind} id {id} is unknown{context}")]
    Dangling {
        kind: &'static str,
        id: String,
        context: String,
    },

    #[error("duplicate {kind} id {id}")]
    Duplicate { kind: &'static str, id: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value in {layer}")]
    NonFinite { layer: String },

    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64, trace: Vec<f64> },

    #[error("candidate pool exhausted")]
    Exhausted,

    #[error("no precomputed vector for pair ({0:016x}, {1:016x})")]
    MissingPair(u64, u64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Numeric failures (divergence, non-finite activations) as opposed to
    /// input or validation problems.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::NonFinite { .. } | Error::Diverged { .. })
    }
}
