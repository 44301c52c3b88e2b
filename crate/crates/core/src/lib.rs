//! Numerical laboratory for period-doubling renormalization.
//!
//! The crate is organised in four layers: [`series`] (truncated power series
//! and multivariate polynomials), [`renorm`] (the renormalization operator,
//! its fixed point and derivative spectrum), [`cascade`] (the superstable
//! parameter cascade of `z^2 + c`, an independent source of the universal
//! constants) and [`hakim`] (semi-attractive normal forms and parabolic
//! petals).

pub mod series;
pub mod fit;
pub mod renorm;
pub mod cascade;
pub mod hakim;
