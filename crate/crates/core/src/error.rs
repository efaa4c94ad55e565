use thiserror::Error;

/// Errors surfaced by construction, validation and integration routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("spin count must be at least 1, got {0}")]
    BadSpinCount(usize),

    #[error("resonant denominator in {context}: |{value:.3e}| below {threshold:.3e} rad/s")]
    ResonantDenominator {
        context: &'static str,
        value: f64,
        threshold: f64,
    },

    #[error("detuning splitting delta_s must be nonzero")]
    ZeroDeltaS,

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("negative rate {name} = {value:.3e}")]
    NegativeRate { name: &'static str, value: f64 },

    #[error("integration step size underflow at t = {time:.3e} s (h = {step:.3e} s)")]
    StepUnderflow { time: f64, step: f64 },

    #[error(
        "numerical invariant violated at t = {time:.3e} s: {quantity} = {value:.3e} \
         exceeds {threshold:.3e}"
    )]
    InvariantViolation {
        quantity: &'static str,
        value: f64,
        threshold: f64,
        time: f64,
    },

    #[error("mean spin length {0:.3e} too small to define a transverse direction")]
    UndefinedDirection(f64),

    #[error("full-model size cap exceeded: {dim} > {cap}")]
    CapExceeded { dim: usize, cap: usize },

    #[error("projection leakage {leakage:.3e} above threshold {threshold:.3e}")]
    ExcessiveLeakage { leakage: f64, threshold: f64 },

    #[error("linear algebra backend failure: {0}")]
    Linalg(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
