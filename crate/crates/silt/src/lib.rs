//! Numerical laboratory for derivatives of self-intersection local time of
//! d-dimensional Brownian motion.

pub mod constants;
pub mod error;
pub mod kernel;
pub mod quadrature;
pub mod simulation;
pub mod special;
pub mod stats;
pub mod variance;

pub use error::{Error, Result};
pub use kernel::MultiIndex;
