//! Error type shared by all simulation modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Shape mismatch or a dimension outside the dense caps.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Input violates a structural requirement (non-Hermitian, bad weights, ...).
    #[error("invalid input: {0}")]
    Input(String),
    /// A stated precondition of the operation does not hold for this input.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Result would exceed f64 range or an internal guard (overflow, rank loss).
    #[error("numeric range error: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
