use std::io;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error at byte offset {offset}: {source}")]
    StreamIo {
        offset: u64,
        #[source]
        source: io::Error,
    },

    #[error("input is not valid UTF-8 at byte offset {offset}")]
    InvalidUtf8 { offset: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("malformed scientific literal {input:?}: {reason}")]
    Scientific { input: String, reason: &'static str },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate object {object:?} (first seen on line {first_line})")]
    DuplicateObject {
        object: String,
        line: usize,
        first_line: usize,
    },

    #[error("value {0} is outside the positive domain")]
    NonPositive(f64),

    #[error("invalid bucket scheme: {0}")]
    Scheme(String),

    #[error("bucket schemes differ: {left} vs {right}")]
    SchemeMismatch { left: String, right: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("PCA with k = {k} is not attainable: {reason}")]
    PcaRank { k: usize, reason: String },

    #[error("linear system is singular")]
    Singular,

    #[error("optimizer diverged after {iterations} iterations (objective {objective})")]
    Diverged { iterations: usize, objective: f64 },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::StreamIo { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
