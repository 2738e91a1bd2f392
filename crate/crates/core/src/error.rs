use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite function value {value} at quadrature node {node:?}")]
    NonFiniteValue { node: Vec<f64>, value: f64 },

    #[error("negative truncation residual {residual:e} (tolerance {tolerance:e}); increase quadrature order")]
    NegativeResidual { residual: f64, tolerance: f64 },

    #[error("truncation residual {residual:e} exceeds tolerance {tolerance:e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("degenerate covariance: smallest eigenvalue {min_eig:e} below {threshold:e}")]
    DegenerateCovariance { min_eig: f64, threshold: f64 },

    #[error("covariance matrix is not positive semidefinite (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("marginal covariance at index {index} is not the identity (deviation {deviation:e})")]
    NotStandardized { index: usize, deviation: f64 },

    #[error("size limit exceeded: {what} = {size} > {limit}")]
    SizeLimit {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("tail bound {bound:e} above tolerance {tolerance:e}")]
    TailTooLarge { bound: f64, tolerance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
