use thiserror::Error;

/// Errors surfaced by model construction and the numerical solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A problem instance violates a structural invariant (sizes, signs).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    /// Operands passed to an operation do not agree in shape.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    /// An iterative solver could not reach its stopping condition.
    #[error("solver failure: {0}")]
    SolverFailure(String),
    /// A quantity that must hold by construction was violated at runtime.
    /// This always indicates a bug, never bad input.
    #[error("internal consistency violation: {0}")]
    InternalConsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
