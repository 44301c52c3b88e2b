use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{jacobian, renormalize, Germ, OperatorConfig, RenormError};

const MAX_NEWTON_STEPS: usize = 40;
/// Extra steps taken after the tolerance is met, while the step still shrinks.
const POLISH_STEPS: usize = 3;

#[derive(Clone, Debug)]
pub struct FixedPointSolution {
    pub germ: Germ,
    pub beta: Complex64,
    /// `‖Rf - f‖` at the configured norm radius.
    pub residual: f64,
    pub steps: usize,
    pub residual_history: Vec<f64>,
}

/// The quadratic `z^2 + c` in germ form, renormalized `pre_steps` times.
pub fn initial_guess(
    op: &OperatorConfig,
    c_inf: f64,
    order: usize,
    disk_radius: f64,
    pre_steps: usize,
) -> Result<Germ, RenormError> {
    let mut g = Germ::normalized_quadratic(c_inf, order, disk_radius)?;
    for _ in 0..pre_steps {
        g = renormalize(op, &g)?.germ;
    }
    Ok(g)
}

/// Newton's method on the free coordinates `c_2, c_4, ...` for `R f = f`,
/// with the Jacobian from [`jacobian`].
pub fn solve_fixed_point(
    op: &OperatorConfig,
    initial: &Germ,
    tol: f64,
) -> Result<FixedPointSolution, RenormError> {
    let n = initial.dimension();
    let mut g = initial.clone();
    let mut history = Vec::new();
    let mut best: Option<FixedPointSolution> = None;
    let mut last_step = f64::INFINITY;
    let mut polished = 0;
    for step in 0..=MAX_NEWTON_STEPS {
        let r = renormalize(op, &g)?;
        let residual = r
            .germ
            .series()
            .sub(g.series())?
            .disk_norm_bound(op.norm_radius)?;
        history.push(residual);
        if residual <= tol && best.as_ref().is_none_or(|b| residual <= b.residual) {
            best = Some(FixedPointSolution {
                germ: g.clone(),
                beta: r.beta,
                residual,
                steps: step,
                residual_history: history.clone(),
            });
        }
        if best.is_some() && polished >= POLISH_STEPS {
            break;
        }
        if step == MAX_NEWTON_STEPS {
            break;
        }
        let j = jacobian(op, &g)?;
        let x = DVector::from_vec(g.free_coords());
        let fx = DVector::from_vec(r.germ.free_coords()) - &x;
        let a = j - DMatrix::identity(n, n);
        let dx = a
            .lu()
            .solve(&(-fx))
            .ok_or_else(|| RenormError::Numerical("singular Newton matrix".into()))?;
        let size = dx.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if best.is_some() {
            if size >= last_step {
                break;
            }
            polished += 1;
        }
        last_step = size;
        g = Germ::from_free((x + dx).as_slice(), g.order(), g.disk_radius())?;
    }
    match best {
        Some(mut b) => {
            b.residual_history = history;
            Ok(b)
        }
        None => Err(RenormError::SolverFailure {
            steps: MAX_NEWTON_STEPS,
            residual: history.last().copied().unwrap_or(f64::INFINITY),
        }),
    }
}
