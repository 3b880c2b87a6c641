use std::io;

use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "exhaustive search over {n_cols} columns exceeds the cap of {cap}; \
         use coordinate ascent instead"
    )]
    Capacity { n_cols: usize, cap: usize },

    #[error("SNR gain undefined: direct path has zero gain")]
    UndefinedBaseline,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;

pub(crate) fn invalid(msg: impl Into<String>) -> SimError {
    SimError::InvalidArgument(msg.into())
}
