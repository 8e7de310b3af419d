//! Error types shared across the pipeline.
//!
//! Every fallible operation returns [`PipeError`]. The variants map onto the
//! CLI exit codes: validation problems exit 2, I/O problems exit 3, solver and
//! training failures exit 4.

use std::path::PathBuf;

/// Unified error type for the whole pipeline.
#[derive(Debug, thiserror::Error)]
pub enum PipeError {
    /// A parameter violates an operation precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An object is in the wrong state for the requested operation
    /// (e.g. normalizing an already-normalized window).
    #[error("invalid state: {0}")]
    InvalidState(String),

    /// An event is missing channels or otherwise malformed in memory.
    #[error("malformed event: {0}")]
    MalformedEvent(String),

    /// A file is missing a required column or header key.
    #[error("schema error in {path}: missing {what}")]
    Schema { path: PathBuf, what: String },

    /// A file contains an unparseable or non-finite value.
    #[error("data error in {path}, row {row}: {what}")]
    Data {
        path: PathBuf,
        row: usize,
        what: String,
    },

    /// Row counts, rates, or block sizes in a file disagree with its header.
    #[error("structural error in {path}: {what}")]
    Structure { path: PathBuf, what: String },

    /// Tensor or layer dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A test-split event leaked into a training-only operation.
    #[error("contamination: {0}")]
    Contamination(String),

    /// Underlying I/O failure.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// An optimizer failed to converge or produced unusable output.
    #[error("solver error: {0}")]
    Solver(String),

    /// A model or report file has an unrecognized or inconsistent layout.
    #[error("format error in {path}: {what}")]
    Format { path: PathBuf, what: String },
}

impl PipeError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipeError::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipeError::Io { .. } => 3,
            PipeError::Solver(_) => 4,
            _ => 2,
        }
    }
}

/// Pipeline-wide result alias.
pub type Result<T> = std::result::Result<T, PipeError>;
