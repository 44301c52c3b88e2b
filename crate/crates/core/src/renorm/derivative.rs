use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::operator::renormalize_series_with_threshold;
use super::{Germ, OperatorConfig, RenormError};
use crate::series::TruncatedSeries;

/// Probe attempts with a halved starting step before giving up.
const PROBE_RETRIES: usize = 4;

/// Directions `z^{2j} - 1`, `j = 1..N/2`, which span the tangent space of the
/// normalized even germs in free coordinates.
pub fn tangent_basis(order: usize, disk_radius: f64) -> Result<Vec<TruncatedSeries>, RenormError> {
    (1..=order / 2)
        .map(|j| {
            let mut e = TruncatedSeries::zero(order, disk_radius)?;
            e.set_coeff(0, Complex64::new(-1.0, 0.0));
            e.set_coeff(2 * j, Complex64::new(1.0, 0.0));
            Ok(e)
        })
        .collect()
}

fn max_diff(a: &TruncatedSeries, b: &TruncatedSeries) -> f64 {
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// `p` applications of the operator with the given composition tail
/// threshold.
fn iterate_series(
    op: &OperatorConfig,
    f: &TruncatedSeries,
    p: usize,
    threshold: f64,
) -> Result<TruncatedSeries, RenormError> {
    let mut g = f.clone();
    for _ in 0..p {
        g = renormalize_series_with_threshold(op, &g, threshold)?.0;
    }
    Ok(g)
}

fn central_difference(
    op: &OperatorConfig,
    f: &TruncatedSeries,
    u: &TruncatedSeries,
    h: f64,
    iterate: usize,
) -> Result<TruncatedSeries, RenormError> {
    let probe = |s: f64| -> Result<TruncatedSeries, RenormError> {
        let g = f.axpy(Complex64::new(s, 0.0), u)?;
        iterate_series(op, &g, iterate, f64::INFINITY).map_err(|e| RenormError::ProbeFailure {
                h,
                source: Box::new(e),
            })
    };
    let plus = probe(h)?;
    let minus = probe(-h)?;
    Ok(plus.sub(&minus)?.scale(Complex64::new(0.5 / h, 0.0)))
}

/// Derivative of `f -> Rf` at `f` along `v`, including the implicit variation
/// of the rescale factor.
///
/// `v` is first scaled to unit disk norm. Central differences with steps
/// `h_0, h_0/2, ...` feed a Richardson table; the first diagonal entry within
/// `fd_tol` (maximum coefficient difference) of its predecessor is returned.
/// If the table never settles the pair with the smallest gap wins.
///
/// The composition tail is checked once at `f` itself. A polynomial
/// direction of degree at most `N` adds nothing beyond the truncation order,
/// so the probes `f ± hv` inherit that check instead of re-reading their top
/// coefficients as a tail.
pub fn directional_derivative(
    op: &OperatorConfig,
    f: &TruncatedSeries,
    v: &TruncatedSeries,
) -> Result<TruncatedSeries, RenormError> {
    directional_derivative_iterate(op, f, v, 1)
}

/// Same scheme for the `p`-fold iterate of the operator.
pub(crate) fn directional_derivative_iterate(
    op: &OperatorConfig,
    f: &TruncatedSeries,
    v: &TruncatedSeries,
    iterate: usize,
) -> Result<TruncatedSeries, RenormError> {
    if v.coeffs().iter().all(|c| *c == Complex64::new(0.0, 0.0)) {
        return Ok(TruncatedSeries::zero(f.order().min(v.order()), f.disk_radius())?);
    }
    let scale = v.disk_norm_bound(op.norm_radius.min(v.disk_radius()))?;
    let u = v.scale(Complex64::new(1.0 / scale, 0.0));
    iterate_series(op, f, iterate, op.tail_threshold)?;

    let mut h = op.fd_step;
    let mut first = None;
    for attempt in 0..=PROBE_RETRIES {
        match central_difference(op, f, &u, h, iterate) {
            Ok(d) => {
                first = Some(d);
                break;
            }
            Err(e) if attempt == PROBE_RETRIES => return Err(e),
            Err(_) => h *= 0.5,
        }
    }
    let mut prev_row = vec![first.expect("first probe succeeded")];
    let mut best = (f64::INFINITY, prev_row[0].clone());
    for level in 1..op.fd_max_levels {
        h *= 0.5;
        let mut row = vec![central_difference(op, f, &u, h, iterate)?];
        let mut factor = 1.0;
        for j in 1..=level {
            factor *= 4.0;
            let refined = row[j - 1].sub(&prev_row[j - 1])?.scale(Complex64::new(1.0 / (factor - 1.0), 0.0));
            row.push(row[j - 1].add(&refined)?);
        }
        let gap = max_diff(&row[level], &prev_row[level - 1]);
        if gap < best.0 {
            best = (gap, row[level].clone());
        }
        if gap < op.fd_tol {
            break;
        }
        prev_row = row;
    }
    Ok(best.1.scale(Complex64::new(scale, 0.0)))
}

/// Matrix of the derivative in the free even coordinates `c_2, c_4, ...`:
/// column `j` holds the even coefficients of the derivative along the `j`-th
/// tangent direction. Columns are computed in parallel and assembled in
/// order.
pub fn jacobian(op: &OperatorConfig, f: &Germ) -> Result<DMatrix<Complex64>, RenormError> {
    let n = f.dimension();
    let basis = tangent_basis(f.order(), f.disk_radius())?;
    let columns: Vec<TruncatedSeries> = basis
        .par_iter()
        .map(|e| directional_derivative(op, f.series(), e))
        .collect::<Result<_, _>>()?;
    Ok(DMatrix::from_fn(n, n, |i, j| columns[j].coeff(2 * (i + 1))))
}
