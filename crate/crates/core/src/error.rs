use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An exponent or size parameter lies outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// The instance cannot be evaluated, typically because a weight has zero
    /// mass on an interval where an average is needed.
    #[error("degenerate instance: {0}")]
    Degenerate(String),
    /// A step function does not live on a partition compatible with the family.
    #[error("partition mismatch: {0}")]
    PartitionMismatch(String),
    /// An operation was called outside its documented precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
