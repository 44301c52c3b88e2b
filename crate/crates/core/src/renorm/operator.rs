use num_complex::Complex64;

use super::{Germ, OperatorConfig, RenormError};
use crate::series::TruncatedSeries;

/// Output of one application of the operator to a germ.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormResult {
    pub germ: Germ,
    pub beta: Complex64,
    /// `|Rf(1) - 1|` before `c_0` is corrected for round-off.
    pub residual_g1: f64,
}

/// Root of `f(f(β)) = β` reached by Newton from the middle of the configured
/// window. The root must land in the window (real part inside it, imaginary
/// part below half its width).
pub fn find_beta(op: &OperatorConfig, f: &TruncatedSeries) -> Result<Complex64, RenormError> {
    let (lo, hi) = op.beta_window;
    let mut x = Complex64::new(0.5 * (lo + hi), 0.0);
    let residual = |x: Complex64| {
        let (f1, d1) = f.eval_with_derivative(x);
        let (f2, d2) = f.eval_with_derivative(f1);
        (f2 - x, d2 * d1 - 1.0)
    };
    let mut converged_at = None;
    let mut last = f64::INFINITY;
    for step in 0..op.beta_max_steps {
        let (g, dg) = residual(x);
        let size = g.norm();
        if !size.is_finite() {
            return Err(RenormError::NotRenormalizable(
                "Newton iterate for the rescale factor diverged".into(),
            ));
        }
        if size <= op.beta_tol && converged_at.is_none() {
            converged_at = Some(step);
        }
        // Polish a couple of steps past the tolerance while it still helps.
        if let Some(at) = converged_at {
            if size >= last || step >= at + 2 || size == 0.0 {
                break;
            }
        }
        last = size;
        if dg.norm() == 0.0 {
            return Err(RenormError::NotRenormalizable(
                "vanishing derivative in the rescale-factor solve".into(),
            ));
        }
        x -= g / dg;
    }
    if converged_at.is_none() {
        return Err(RenormError::NotRenormalizable(format!(
            "no root of f(f(z)) = z found in {} Newton steps",
            op.beta_max_steps
        )));
    }
    if !(x.re > lo && x.re < hi && x.im.abs() < 0.5 * (hi - lo)) {
        return Err(RenormError::NotRenormalizable(format!(
            "root {x} lies outside the window ({lo}, {hi})"
        )));
    }
    Ok(x)
}

/// `β⁻¹ f(f(βz))` for an arbitrary series (no parity or normalization is
/// assumed). The result keeps the reference disk of `f`.
pub fn renormalize_series(
    op: &OperatorConfig,
    f: &TruncatedSeries,
) -> Result<(TruncatedSeries, Complex64), RenormError> {
    renormalize_series_with_threshold(op, f, op.tail_threshold)
}

pub(crate) fn renormalize_series_with_threshold(
    op: &OperatorConfig,
    f: &TruncatedSeries,
    threshold: f64,
) -> Result<(TruncatedSeries, Complex64), RenormError> {
    let beta = find_beta(op, f)?;
    let inner = f.scale_argument(beta);
    let ff = f.compose_with_threshold(&inner, threshold)?;
    Ok((ff.scale(beta.inv()), beta))
}

pub fn renormalize(op: &OperatorConfig, f: &Germ) -> Result<RenormResult, RenormError> {
    let (s, beta) = renormalize_series(op, f.series())?;
    let residual_g1 = (s.eval(Complex64::new(1.0, 0.0)) - 1.0).norm();
    Ok(RenormResult {
        germ: Germ::renormalized_value(&s)?,
        beta,
        residual_g1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_square_is_not_renormalizable() {
        let s = TruncatedSeries::from_real(&[0.0, 0.0, 1.0], 20, 1.0).unwrap();
        let g = Germ::new(s).unwrap();
        let err = find_beta(&OperatorConfig::default(), g.series()).unwrap_err();
        assert!(matches!(err, RenormError::NotRenormalizable(_)));
        assert!(renormalize(&OperatorConfig::default(), &g).is_err());
    }

    #[test]
    fn quadratic_beta_solves_the_period_equation() {
        let op = OperatorConfig::default();
        let g = Germ::normalized_quadratic(-1.4, 30, 1.0).unwrap();
        let b = find_beta(&op, g.series()).unwrap();
        let s = g.series();
        assert!((s.eval(s.eval(b)) - b).norm() <= 1e-12);
        assert!(b.re > -0.6 && b.re < -0.2);
    }

    #[test]
    fn renormalization_keeps_parity_and_value() {
        let op = OperatorConfig::default();
        let g = Germ::normalized_quadratic(-1.4, 30, 1.0).unwrap();
        let r = renormalize(&op, &g).unwrap();
        assert!(r.residual_g1 <= 1e-10);
        for k in (1..=30).step_by(2) {
            assert_eq!(r.germ.series().coeff(k).norm(), 0.0);
        }
    }
}
