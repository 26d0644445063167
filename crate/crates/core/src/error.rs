use thiserror::Error;

/// Errors raised by the spectral machinery, the solvers and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0:?} vs {1:?}")]
    GridMismatch([usize; 3], [usize; 3]),

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("conjugate symmetry violated by {0:e}")]
    SymmetryViolation(f64),

    #[error("symbol does not preserve reality at k = {0:?}")]
    RealityBreakingSymbol([i64; 3]),

    #[error("field has a nonzero horizontal mean (max coefficient {0:e})")]
    NonzeroHorizontalMean(f64),

    #[error("profile does not integrate to zero (integral {0:e})")]
    NonzeroAverage(f64),

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    #[error("invalid multiplier: {0}")]
    InvalidMultiplier(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("zero field has no defined ratio")]
    ZeroField,

    #[error("empty series")]
    EmptySeries,

    #[error("solution blew up at t = {t} (step {step})")]
    BlowUp {
        t: f64,
        step: usize,
        /// Last state that was still finite.
        last_valid: Box<crate::evolution::SimState>,
    },

    #[error("bad snapshot: {0}")]
    BadSnapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
