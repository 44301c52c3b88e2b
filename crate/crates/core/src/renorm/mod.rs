//! The period-doubling renormalization operator `Rf(z) = β⁻¹ f(f(βz))` on
//! normalized even germs, its fixed point, derivative spectrum and the
//! identities that follow from the fixed-point equation.

mod derivative;
mod germ;
mod horizontal;
mod newton;
mod operator;
mod spectrum;
mod tower;

pub use derivative::{directional_derivative, jacobian, tangent_basis};
pub use germ::Germ;
pub use horizontal::{
    eq1_battery, eq1_check, eq1_residual, eq1_residual_iterate, horizontal_vector, r_transform,
    Eq1Report, HorizontalVector,
};
pub use newton::{initial_guess, solve_fixed_point, FixedPointSolution};
pub use operator::{find_beta, renormalize, renormalize_series, RenormResult};
pub use spectrum::{eigen_spectrum, SpectrumReport, UnstableProjection, SPECTRAL_GAP};
pub use tower::{contraction_trace, tail_slope, tower_check, tower_map, ContractionTrace, TowerLevel};

use thiserror::Error;

use crate::series::{SeriesError, DEFAULT_TAIL_THRESHOLD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenormError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("not renormalizable: {0}")]
    NotRenormalizable(String),
    #[error("invalid germ: {0}")]
    InvalidGerm(String),
    #[error("fixed-point solver failed after {steps} steps (residual {residual:e})")]
    SolverFailure { steps: usize, residual: f64 },
    #[error("renormalization failed at probe step h = {h:e}; retry with a smaller step ({source})")]
    ProbeFailure {
        h: f64,
        #[source]
        source: Box<RenormError>,
    },
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Tunable parameters of the operator and its derivative.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorConfig {
    /// Open interval on the real axis in which the rescale factor is sought.
    pub beta_window: (f64, f64),
    pub beta_tol: f64,
    pub beta_max_steps: usize,
    /// Radius at which all reported norms are measured.
    pub norm_radius: f64,
    pub tail_threshold: f64,
    /// First finite-difference step of the Richardson table.
    pub fd_step: f64,
    /// Stopping tolerance between successive Richardson estimates.
    pub fd_tol: f64,
    pub fd_max_levels: usize,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            beta_window: (-0.6, -0.2),
            beta_tol: 1e-12,
            beta_max_steps: 50,
            norm_radius: 0.8,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
            fd_step: 1e-2,
            fd_tol: 1e-9,
            fd_max_levels: 8,
        }
    }
}
