//! Semi-attractive polynomial maps `(x, y) -> (F(x, y), G(y) + x h(x, y))` on
//! `C x C^m`: the chain of coordinate changes to normal form, multiplicity
//! along the curve of `y`-fixed points and its invariance, and orbits in a
//! parabolic petal.

mod map;
mod multiplicity;
mod normal_form;
mod petal;
pub mod samples;

pub use map::{conjugate, ChangeOfVariables, SemiAttractiveMap, CONTRACTION_MARGIN};
pub use multiplicity::{
    count_zeros, fixed_point_curve, multiplicity, multiplicity_invariance, InvarianceResult,
    Multiplicity, MultiplicityResult, COEFF_TOL, LAMBDA_SWEEP,
};
pub use normal_form::{
    kill_y_dependence, linear_defect, normalize_a1, reduce, stable_manifold_defect,
    straighten_stable_manifold, y_dependence_defect, NormalFormLog, Stage, StageRecord,
};
pub use petal::{
    adaptive_petal, fatou_coordinate_check, iterate_petal, petal_seed_x, FatouCheck, FitWindow,
    PetalConfig, PetalOrbit,
};

use thiserror::Error;

use crate::series::SeriesError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HakimError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("normal form failed at degree {degree}: {message}")]
    NormalForm { degree: u32, message: String },
    #[error("{stage}: no convergence within {terms} terms; contraction too weak")]
    ContractionTooWeak { stage: String, terms: usize },
    #[error("ill-posed fixed-point curve: {0}")]
    IllPosed(String),
    #[error("contour |x| = {radius} passes within {modulus:e} of a zero")]
    ContourUnsafe { radius: f64, modulus: f64 },
    #[error("argument principle did not stabilise on |x| = {0}")]
    QuadratureFailure(f64),
    #[error("degree cap exceeded: {0}")]
    DegreeCap(String),
    #[error("orbit left the petal (R = {radius}, rho = {rho}) at step {step}")]
    PetalEscape { step: usize, radius: f64, rho: f64 },
}
