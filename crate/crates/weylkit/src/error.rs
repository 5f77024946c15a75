//! Crate-wide error type.

use num_complex::Complex64;

/// Errors surfaced by the toolkit.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("spectral parameter z = {z} outside the admissible domain: {reason}")]
    SpectralDomain { z: Complex64, reason: &'static str },

    #[error("singular or ill-conditioned matrix in {context}")]
    Singular { context: &'static str },

    #[error("invalid interval [{from}, {to}]")]
    InvalidInterval { from: f64, to: f64 },

    #[error("invalid boundary data: {0}")]
    InvalidBoundaryData(&'static str),

    #[error("step size underflow near x = {x:.6e}: the system is too stiff for the requested tolerance")]
    StepUnderflow { x: f64 },

    #[error("step budget of {max_steps} exhausted near x = {x:.6e}")]
    MaxStepsExceeded { x: f64, max_steps: usize },

    #[error("solution norm exceeded {limit:.1e} near x = {x:.6e}; {advice}")]
    Blowup {
        x: f64,
        limit: f64,
        advice: &'static str,
    },

    #[error("Riccati pole crossing detected near x = {x:.6e}")]
    RiccatiPole { x: f64 },

    #[error("no convergence: {context}; residual history {history:?}")]
    NoConvergence {
        context: &'static str,
        history: Vec<(f64, f64)>,
    },

    #[error("potential provides derivatives up to order {available}, but Q^({required}) is needed")]
    InsufficientSmoothness { required: usize, available: usize },

    #[error("operation requires a compactly supported potential (no support hint present)")]
    NonCompactSupport,

    #[error("angle {angle} outside the admissible range ({lo}, {hi}]")]
    OutsideSector { angle: f64, lo: f64, hi: f64 },

    #[error("derivative closure inconsistent with finite differences at x = {x}: relative error {rel:.3e}")]
    DerivativeMismatch { x: f64, rel: f64 },

    #[error("Herglotz positivity violated: psd defect {defect:.3e} (tolerance {tol:.3e})")]
    HerglotzViolation { defect: f64, tol: f64 },

    #[error("internal consistency check failed: {what}")]
    InternalCheck { what: &'static str },

    #[error("{0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
