use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation (index 0, t outside [0, 1], ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Array lengths or dimensions do not agree.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// A model or experiment specification violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),
    /// The balancing search for the optimal dimension did not terminate.
    #[error("search cap exceeded: {0}")]
    SearchCap(String),
}

pub type Result<T> = std::result::Result<T, Error>;
