use num_complex::Complex64;

use super::derivative::directional_derivative_iterate;
use super::{renormalize_series, Germ, OperatorConfig, RenormError};
use crate::series::{SeriesError, TruncatedSeries};

/// Tolerance on `α(0)` and `α(1)`.
const WITNESS_TOL: f64 = 1e-12;

/// `v = α∘f - f'·α` together with the vector field `α` it was built from.
#[derive(Clone, Debug, PartialEq)]
pub struct HorizontalVector {
    pub v: TruncatedSeries,
    pub alpha: TruncatedSeries,
}

fn lie_action(f: &TruncatedSeries, alpha: &TruncatedSeries) -> Result<TruncatedSeries, RenormError> {
    let n = f.order().min(alpha.order());
    let pushed = alpha.compose(f)?;
    let df = f.derivative().truncate(n);
    Ok(pushed.sub(&df.multiply(&alpha.truncate(n))?)?)
}

pub fn horizontal_vector(f: &Germ, alpha: &TruncatedSeries) -> Result<HorizontalVector, RenormError> {
    let at0 = alpha.coeff(0).norm();
    let at1 = (alpha.eval(Complex64::new(1.0, 0.0))).norm();
    if at0 > WITNESS_TOL || at1 > WITNESS_TOL {
        return Err(RenormError::InvalidWitness(format!(
            "need α(0) = α(1) = 0, got |α(0)| = {at0:e}, |α(1)| = {at1:e}"
        )));
    }
    Ok(HorizontalVector {
        v: lie_action(f.series(), alpha)?,
        alpha: alpha.clone(),
    })
}

/// `z -> β⁻¹ α(βz) - β⁻¹ α(β) z`.
pub fn r_transform(alpha: &TruncatedSeries, beta: Complex64) -> Result<TruncatedSeries, RenormError> {
    if beta == Complex64::new(0.0, 0.0) || !beta.is_finite() {
        return Err(SeriesError::DegenerateScale.into());
    }
    let mut out = alpha.scale_argument(beta).scale(beta.inv());
    let shift = alpha.eval(beta) / beta;
    out.set_coeff(1, out.coeff(1) - shift);
    Ok(out)
}

/// `‖DR_f·v - (r(α)∘Rf - (Rf)'·r(α))‖` at the norm radius for the horizontal
/// vector `v` generated by `α`.
pub fn eq1_residual(op: &OperatorConfig, f: &Germ, alpha: &TruncatedSeries) -> Result<f64, RenormError> {
    eq1_residual_iterate(op, f, alpha, 1)
}

/// The same identity for the `p`-fold iterate, where `r` is applied once per
/// step with that step's rescale factor.
pub fn eq1_residual_iterate(
    op: &OperatorConfig,
    f: &Germ,
    alpha: &TruncatedSeries,
    iterate: usize,
) -> Result<f64, RenormError> {
    let hv = horizontal_vector(f, alpha)?;
    let lhs = directional_derivative_iterate(op, f.series(), &hv.v, iterate)?;
    let mut g = f.series().clone();
    let mut a = alpha.clone();
    for _ in 0..iterate {
        let (next, beta) = renormalize_series(op, &g)?;
        a = r_transform(&a, beta)?;
        g = next;
    }
    let rhs = lie_action(&g, &a)?;
    let n = lhs.order().min(rhs.order());
    Ok(lhs.truncate(n).sub(&rhs.truncate(n))?.disk_norm_bound(op.norm_radius)?)
}

/// Five polynomial vector fields vanishing at `0` and `1`.
pub fn eq1_battery(order: usize, disk_radius: f64) -> Result<Vec<(String, TruncatedSeries)>, RenormError> {
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    let specs: [(&str, Vec<(usize, Complex64)>); 5] = [
        ("z^2-z", vec![(2, one), (1, -one)]),
        ("z^3-z^2", vec![(3, one), (2, -one)]),
        ("z^3-z", vec![(3, one), (1, -one)]),
        ("z^4-z", vec![(4, one), (1, -one)]),
        ("i(z-z^2)", vec![(1, i), (2, -i)]),
    ];
    specs
        .into_iter()
        .map(|(name, terms)| {
            let mut a = TruncatedSeries::zero(order, disk_radius)?;
            for (k, c) in terms {
                a.set_coeff(k, c);
            }
            Ok((name.to_string(), a))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Eq1Report {
    pub names: Vec<String>,
    /// Residuals for the single operator step.
    pub first_iterate: Vec<f64>,
    /// Residuals for the two-step iterate, computed only when a single-step
    /// residual exceeds the tolerance.
    pub second_iterate: Option<Vec<f64>>,
    pub tolerance: f64,
    /// The iterate whose residuals decide the verdict.
    pub iterate: usize,
    pub passed: bool,
}

pub fn eq1_check(op: &OperatorConfig, f: &Germ, tol: f64) -> Result<Eq1Report, RenormError> {
    let battery = eq1_battery(f.order(), f.disk_radius())?;
    let names = battery.iter().map(|(n, _)| n.clone()).collect();
    let first: Vec<f64> = battery
        .iter()
        .map(|(_, a)| eq1_residual(op, f, a))
        .collect::<Result<_, _>>()?;
    if first.iter().all(|&r| r <= tol) {
        return Ok(Eq1Report {
            names,
            first_iterate: first,
            second_iterate: None,
            tolerance: tol,
            iterate: 1,
            passed: true,
        });
    }
    let second: Vec<f64> = battery
        .iter()
        .map(|(_, a)| eq1_residual_iterate(op, f, a, 2))
        .collect::<Result<_, _>>()?;
    let passed = second.iter().all(|&r| r <= tol);
    Ok(Eq1Report {
        names,
        first_iterate: first,
        second_iterate: Some(second),
        tolerance: tol,
        iterate: 2,
        passed,
    })
}
