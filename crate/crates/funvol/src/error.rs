use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A density or function evaluation produced a non-finite value.
    #[error("evaluation produced a non-finite value at s = {at}: {detail}")]
    Evaluation { at: f64, detail: String },

    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A documented precondition of an operation is violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Ambient dimensions of the operands do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// An iterative numeric procedure failed to converge.
    #[error("{op} did not converge near {location:?}")]
    NonConvergence { op: String, location: Vec<f64> },

    /// The requested combination of representation and operation is not
    /// supported.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Descriptor parsing / validation failure.
    #[error("invalid descriptor: {0}")]
    Descriptor(String),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }
}
