use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("dimension mismatch: point has {point} coordinates, multi-index has {index}")]
    DimensionMismatch { point: usize, index: usize },
    #[error("derivative order {0} exceeds the supported maximum of {max}", max = crate::kernel::MAX_ORDER)]
    OrderTooLarge(u32),
    #[error("invalid multi-index: {0}")]
    InvalidMultiIndex(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("inadmissible combination: {0}")]
    Inadmissible(String),
    #[error("variance series diverges for d={d}, |k|={abs_k}")]
    Divergent { d: usize, abs_k: u32 },
    #[error("quadrature did not converge: value {value}, error estimate {error}")]
    Quadrature { value: f64, error: f64 },
    #[error("too few samples: got {got}, need at least {need}")]
    TooFewSamples { got: usize, need: usize },
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveEps(eps))
    }
}
