//! One error type for the whole core library. Variants carry the measured
//! quantity that tripped them so callers can report honest diagnostics.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |a_ij - conj(a_ji)| = {defect:.3e} exceeds tol {tol:.3e}")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("state norm {norm:.6e} outside tolerated range")]
    BadNorm { norm: f64 },

    #[error("step too large: dt*max_j||H_j|| = {dt_m:.3e} exceeds {limit} (quadratic bound regime)")]
    StepTooLarge { dt_m: f64, limit: f64 },

    #[error("quadrature underresolved: residual {residual:.3e}")]
    QuadratureUnderresolved { residual: f64 },

    #[error("positivity lost: min eigenvalue {min_eigenvalue:.3e}")]
    PositivityLost { min_eigenvalue: f64 },

    #[error("internal cross-check failed in {context}: deviation {deviation:.3e} exceeds {tol:.3e}")]
    CrossCheck {
        context: &'static str,
        deviation: f64,
        tol: f64,
    },

    #[error(
        "site potential unbounded below (m2 = {mass2}, lambda0 = {lambda0}, sigma = {sigma}); \
         refusing to sample, see potential_minimum"
    )]
    UnstableAction { mass2: f64, lambda0: f64, sigma: f64 },

    #[error("cached action drifted from recompute: relative drift {drift:.3e} exceeds {tol:.3e}")]
    ActionDrift { drift: f64, tol: f64 },

    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
