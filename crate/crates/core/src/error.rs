use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no usable subchannel: every gain is zero")]
    NoUsableSubchannel,

    #[error("mask and channel zero patterns differ")]
    PatternMismatch,

    /// An internal structural invariant failed. This is a defect, not a user error.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
