//! Error vocabulary shared by every module in the crate.
//!
//! Variants mirror how callers are expected to react: bad inputs, operations
//! a given algebraic structure cannot support, enumeration/resource caps,
//! solver failures, and violated mathematical preconditions.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed input: wrong element shape, mismatched specs, bad weights.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The structure cannot support the operation (e.g. inverses in an
    /// inverse-free semigroup, canonical actions of infinite groups).
    #[error("unsupported operation: {0}")]
    UnsupportedOperation(String),

    /// An enumeration or iteration cap was exceeded before completion.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    /// The embedded LP solver failed (infeasible, unbounded, numerical).
    #[error("solver failure: {0}")]
    Solver(String),

    /// A documented mathematical precondition does not hold for the input.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A bug: an internal consistency check failed.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn unsupported(msg: impl Into<String>) -> Self {
        Error::UnsupportedOperation(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::ResourceLimit(msg.into())
    }
}
