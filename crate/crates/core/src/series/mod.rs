//! Truncated power series in one complex variable and truncated multivariate
//! polynomials.
//!
//! [`TruncatedSeries`] is the concrete model for analytic functions on a disk:
//! coefficients `c_0..c_N` together with the radius of the reference disk on
//! which norms are measured. [`MultiPoly`] carries the polynomial data of maps
//! on `C x C^m` used by the normal-form engine.

mod multipoly;
mod truncated;

pub use multipoly::{Monomial, MultiPoly, MAX_VARS};
pub use truncated::{TruncatedSeries, DEFAULT_TAIL_THRESHOLD};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("disk radius mismatch: {left} vs {right}")]
    DomainMismatch { left: f64, right: f64 },
    #[error("invalid disk radius {0}")]
    InvalidRadius(f64),
    #[error("norm radius {radius} exceeds the reference disk radius {disk}")]
    RadiusOutsideDisk { radius: f64, disk: f64 },
    #[error("affine rescaling by zero")]
    DegenerateScale,
    #[error("composition tail estimate {tail:e} exceeds threshold {threshold:e}")]
    CompositionDivergence { tail: f64, threshold: f64 },
    #[error("series must have at least one coefficient")]
    Empty,
    #[error("variable count mismatch: {left} vs {right}")]
    VariableMismatch { left: usize, right: usize },
    #[error("at most {MAX_VARS} variables are supported, got {0}")]
    TooManyVariables(usize),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}
