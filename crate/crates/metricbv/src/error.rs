//! Crate-wide error type.
//!
//! Errors split into two families that callers (notably the CLI) treat
//! differently: plain input problems ([`Error::is_precondition`] is false)
//! and precondition failures, where the input was well formed but a scan or
//! budget that an algorithm depends on did not succeed.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("invalid subset: {0}")]
    InvalidSubset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    /// A radius scan could not find a scale with the required measure bound.
    #[error("density precondition failed at {context}: best ratio {best_ratio} (needed < {needed})")]
    DensityPrecondition {
        context: String,
        best_ratio: f64,
        needed: f64,
    },

    /// An enumeration exceeded its configured size budget.
    #[error("{what} exceeds cap {cap}; rerun with a larger --cap-segments")]
    CapExceeded { what: String, cap: usize },
}

impl Error {
    /// Precondition failures map to a distinct process exit code so scripts
    /// can tell "bad input" from "input fine, scan failed".
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::DensityPrecondition { .. } | Error::CapExceeded { .. }
        )
    }

    pub fn invalid_space(msg: impl Into<String>) -> Self {
        Error::InvalidSpace(msg.into())
    }
    pub fn invalid_function(msg: impl Into<String>) -> Self {
        Error::InvalidFunction(msg.into())
    }
    pub fn invalid_subset(msg: impl Into<String>) -> Self {
        Error::InvalidSubset(msg.into())
    }
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
