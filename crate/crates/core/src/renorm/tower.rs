use num_complex::Complex64;

use super::{renormalize, Germ, OperatorConfig, RenormError, UnstableProjection};
use crate::fit::least_squares;
use crate::series::{SeriesError, TruncatedSeries};

/// Halvings of the check radius allowed when a composition is rejected.
const MAX_RADIUS_HALVINGS: usize = 20;

/// `z -> β^{-i} f(β^i z)`.
pub fn tower_map(fstar: &Germ, beta: Complex64, i: u32) -> Result<TruncatedSeries, RenormError> {
    if i == 0 {
        return Ok(fstar.series().clone());
    }
    Ok(fstar.series().affine_conjugate(beta.powu(i))?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerLevel {
    pub level: u32,
    pub radius: f64,
    /// `‖f_i∘f_i - f_{i-1}‖` on the disk of that radius.
    pub residual: f64,
}

/// Measures `f_i∘f_i = f_{i-1}` for `i = 1..=levels` on disks of radius
/// `0.5|β|^{-i}`, capped by the disks on which both levels are defined and
/// halved while the composition is rejected.
pub fn tower_check(fstar: &Germ, beta: Complex64, levels: u32) -> Result<Vec<TowerLevel>, RenormError> {
    (1..=levels)
        .map(|i| {
            let fi = tower_map(fstar, beta, i)?;
            let prev = tower_map(fstar, beta, i - 1)?;
            let mut radius = (0.5 * beta.norm().powi(-(i as i32)))
                .min(fi.disk_radius())
                .min(prev.disk_radius());
            for _ in 0..=MAX_RADIUS_HALVINGS {
                let inner = fi.with_disk_radius(radius)?;
                match fi.compose(&inner) {
                    Ok(c) => {
                        let residual = c.sub(&prev.with_disk_radius(radius)?)?.disk_norm_bound(radius)?;
                        return Ok(TowerLevel {
                            level: i,
                            radius,
                            residual,
                        });
                    }
                    Err(SeriesError::CompositionDivergence { .. }) => radius *= 0.5,
                    Err(e) => return Err(e.into()),
                }
            }
            Err(RenormError::Numerical(format!("no valid composition radius for tower level {i}")))
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ContractionTrace {
    /// `d_n = ‖R^n f_0 - f*‖` for `n = 0, 1, ...`.
    pub distances: Vec<f64>,
    /// Least-squares slope of `ln d_n` over the second half of the trace.
    pub slope: f64,
    /// Index of the germ that could not be renormalized, with the cause.
    pub failure: Option<(usize, RenormError)>,
}

/// Slope of `ln d_n` against `n` over the tail half, ignoring zero entries.
pub fn tail_slope(distances: &[f64]) -> f64 {
    let start = distances.len() / 2;
    let (xs, ys): (Vec<f64>, Vec<f64>) = distances
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, d)| **d > 0.0)
        .map(|(n, d)| (n as f64, d.ln()))
        .unzip();
    least_squares(&xs, &ys).map_or(f64::NAN, |(slope, _)| slope)
}

/// Iterates the operator from `f0` and records distances to `fstar`. When a
/// projection is supplied the expanding component is removed after every
/// step, which keeps round-off from pushing the orbit off the stable
/// manifold.
pub fn contraction_trace(
    op: &OperatorConfig,
    f0: &Germ,
    fstar: &Germ,
    steps: usize,
    projection: Option<&UnstableProjection>,
) -> Result<ContractionTrace, RenormError> {
    let distance = |g: &Germ| -> Result<f64, RenormError> {
        Ok(g.series().sub(fstar.series())?.disk_norm_bound(op.norm_radius)?)
    };
    let mut g = f0.clone();
    let mut distances = vec![distance(&g)?];
    let mut failure = None;
    for n in 0..steps {
        match renormalize(op, &g) {
            Ok(r) => {
                g = match projection {
                    Some(p) => p.project(&r.germ)?,
                    None => r.germ,
                };
                distances.push(distance(&g)?);
            }
            Err(e) => {
                failure = Some((n, e));
                break;
            }
        }
    }
    Ok(ContractionTrace {
        slope: tail_slope(&distances),
        distances,
        failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_zero_is_the_germ() {
        let g = Germ::normalized_quadratic(-1.4, 10, 1.0).unwrap();
        assert_eq!(&tower_map(&g, Complex64::new(-0.4, 0.0), 0).unwrap(), g.series());
    }

    #[test]
    fn square_germ_fails_at_step_zero() {
        let s = TruncatedSeries::from_real(&[0.0, 0.0, 1.0], 10, 1.0).unwrap();
        let g = Germ::new(s).unwrap();
        let t = contraction_trace(&OperatorConfig::default(), &g, &g, 5, None).unwrap();
        assert_eq!(t.failure.as_ref().map(|f| f.0), Some(0));
        assert_eq!(t.distances, vec![0.0]);
    }

    #[test]
    fn slope_of_exact_geometric_trace() {
        let d: Vec<f64> = (0..10).map(|n| 0.3f64.powi(n)).collect();
        assert!((tail_slope(&d) - 0.3f64.ln()).abs() < 1e-12);
    }
}
