use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QdsError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("map violates model bounds: {0}")]
    BoundViolation(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("array index out of range: k = {k}, n = {n}")]
    IndexOutOfRange { n: usize, k: usize },

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("density is not in the certified class: {0}")]
    CertificateRejected(String),

    #[error("invalid observable: {0}")]
    InvalidObservable(String),

    #[error("inverse branch solver did not converge for target {target}")]
    RootSolve { target: f64 },

    #[error("power iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("Green-Kubo series does not decay (last term {last_term:e} after {terms} terms)")]
    Divergence { terms: usize, last_term: f64 },

    #[error("matrix is not symmetric positive semidefinite: {0}")]
    NotPsd(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("sample too small: {got} < {required}")]
    SampleTooSmall { got: usize, required: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, QdsError>;
