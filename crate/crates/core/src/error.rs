//! Error types shared across modules.

use thiserror::Error;

/// Construction and contract errors for values in the core module.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoreError {
    #[error("width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },
    #[error("index {index} out of range 1..={width}")]
    IndexOutOfRange { index: usize, width: usize },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("instance too large for exhaustive computation: {0}")]
    TooLarge(String),
}

/// Which ledger counter hit its ceiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counter {
    Queries,
    Samples,
}

/// Errors raised while a tester runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestError {
    #[error("budget exhausted on {counter:?} (limit {limit})")]
    BudgetExhausted { counter: Counter, limit: u64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}
