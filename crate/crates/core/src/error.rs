//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand shapes do not conform for an operation.
    #[error("{op}: shape mismatch between {lhs:?} and {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    /// An operand has the wrong rank (e.g. a matrix where a vector is required).
    #[error("{op}: expected rank-{expected} tensor, got shape {shape:?}")]
    Rank {
        op: &'static str,
        expected: usize,
        shape: Vec<usize>,
    },

    /// A non-finite value appeared where a finite one is required.
    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Invalid input to an operation (bad index, empty sequence, ...).
    #[error("input error: {0}")]
    Input(String),

    /// A text file failed to parse.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    /// The domain registry is internally inconsistent or disagrees with the data.
    #[error("registry error: {0}")]
    Registry(String),

    /// An utterance reached a prediction head whose domain set does not contain
    /// its gold domain; indicates a routing bug upstream.
    #[error("routing bug: {0}")]
    Routing(String),

    /// Corpus and registry disagree.
    #[error("consistency error: {0}")]
    Consistency(String),

    /// A checkpoint does not match the artifacts it is being used with.
    #[error("checkpoint mismatch: {0}")]
    CheckpointMismatch(String),

    /// Malformed checkpoint file.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
