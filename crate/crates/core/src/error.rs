use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (relative residual {residual:.3e})")]
    NonHermitian { residual: f64 },

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:.6e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("invalid Schatten exponent {0}; need p >= 1")]
    BadExponent(f64),

    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("map is not completely positive (Choi eigenvalue {min_eigenvalue:.6e})")]
    NotCp { min_eigenvalue: f64 },

    #[error("map is not trace preserving (residual ||sum K^dag K - I|| = {residual:.3e})")]
    NotTp { residual: f64 },

    #[error("POVM elements do not sum to the identity (residual {residual:.3e})")]
    BadPovm { residual: f64 },

    #[error("channel is not tagged as entanglement breaking")]
    NotEbt,

    #[error("unknown name '{0}'")]
    BadName(String),

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {f_lo:.6e}, f(hi) = {f_hi:.6e})")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
