//! Crate-wide error type.
//!
//! Everything that can fail reports through [`Error`]; numerical routines
//! distinguish bad arguments (caller bugs, recoverable by fixing the call)
//! from validation failures detected on data (states that are not normalized,
//! matrices that are not antisymmetric, ...) and from capacity limits on
//! dense storage.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The caller passed an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data failed a structural check (normalization, hermiticity,
    /// antisymmetry, positivity, dimension mismatch).
    #[error("validation failed: {0}")]
    Validation(String),

    /// The request exceeds the dense-storage capacity of this build.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An iterative routine failed to converge or produced unusable output.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// I/O or serialization problems for state files and tables.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
    pub fn capacity(msg: impl Into<String>) -> Self {
        Error::Capacity(msg.into())
    }
    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
