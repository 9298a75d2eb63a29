use thiserror::Error;

/// Errors surfaced by the library core.
///
/// `Rejected` marks inputs that violate a documented precondition and is
/// always detectable before any state is mutated. `Invariant` marks a
/// violated internal guarantee (a bug or a corrupted run); callers should
/// abort the run and surface the diagnostic.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    #[error("rejected input: {0}")]
    Rejected(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invariant violation: {0}")]
    Invariant(String),
}

impl CoreError {
    pub fn rejected(msg: impl Into<String>) -> Self {
        CoreError::Rejected(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        CoreError::DimensionMismatch(msg.into())
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        CoreError::Invariant(msg.into())
    }
}
