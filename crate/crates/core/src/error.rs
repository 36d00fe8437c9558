use thiserror::Error;

/// Errors surfaced by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter error: {0}")]
    Parameter(String),

    /// A ball, margin or window does not fit inside the finite region.
    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Something that the construction guarantees did not happen.
    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("resource budget exceeded: region needs {required_vertices} vertices (~{required_mb} MB) but the budget is {budget_mb} MB")]
    Resource {
        required_vertices: u64,
        required_mb: u64,
        budget_mb: u64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
