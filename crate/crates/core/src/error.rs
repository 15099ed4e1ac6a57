//! Crate-wide error type.
//!
//! Two broad classes matter to callers: domain errors (bad inputs, caller can
//! fix) and numeric errors (a computation failed to converge or produced a
//! non-finite value). The CLI maps the former to exit code 1 and the latter
//! to exit code 2.

use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Input outside the documented domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A numeric routine failed (non-convergence, non-finite intermediate).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// Malformed data or configuration (CSV, JSON).
    #[error("format error: {0}")]
    Format(String),

    /// Underlying I/O failure.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CoreError {
    /// Shorthand for a domain error with a formatted message.
    pub fn domain(msg: impl Into<String>) -> Self {
        CoreError::Domain(msg.into())
    }

    /// Shorthand for a numeric error with a formatted message.
    pub fn numeric(msg: impl Into<String>) -> Self {
        CoreError::Numeric(msg.into())
    }

    /// Shorthand for a format error with a formatted message.
    pub fn format(msg: impl Into<String>) -> Self {
        CoreError::Format(msg.into())
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, CoreError>;
