use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{Germ, RenormError};

/// Half-width of the band around the unit circle that must be free of stable
/// eigenvalues.
pub const SPECTRAL_GAP: f64 = 0.05;
/// Two leading moduli closer than this are treated as a tie.
const TIE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumReport {
    /// Sorted by descending modulus.
    pub eigenvalues: Vec<Complex64>,
    pub delta: Complex64,
    /// Largest modulus among the eigenvalues other than `delta`.
    pub stable_radius: f64,
    pub truncation_order: usize,
    pub expanding_count: usize,
    /// Eigenvalues other than `delta` with modulus in `[1 - gap, 1 + gap]`.
    pub unit_band_count: usize,
    pub top_tie: bool,
    /// Largest distance between an eigenvalue's conjugate and its greedy
    /// partner in the spectrum.
    pub conjugation_defect: f64,
    pub hyperbolic: bool,
}

impl SpectrumReport {
    pub fn gap_margin(&self) -> f64 {
        1.0 - self.stable_radius
    }
}

fn conjugation_defect(values: &[Complex64]) -> f64 {
    let mut used = vec![false; values.len()];
    let mut worst: f64 = 0.0;
    for v in values {
        let target = v.conj();
        let (idx, dist) = values
            .iter()
            .enumerate()
            .filter(|(i, _)| !used[*i])
            .map(|(i, w)| (i, (w - target).norm()))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if idx != usize::MAX {
            used[idx] = true;
            worst = worst.max(dist);
        }
    }
    worst
}

/// Dense eigensolve (complex Schur form) of a square matrix and the derived
/// hyperbolicity diagnostics.
pub fn eigen_spectrum(j: &DMatrix<Complex64>, truncation_order: usize) -> Result<SpectrumReport, RenormError> {
    let n = j.nrows();
    if n == 0 || j.ncols() != n {
        return Err(RenormError::Numerical(format!(
            "eigensolve needs a non-empty square matrix, got {}x{}",
            j.nrows(),
            j.ncols()
        )));
    }
    let schur = nalgebra::linalg::Schur::try_new(j.clone(), f64::EPSILON, 10_000 * n)
        .ok_or_else(|| RenormError::Numerical("QR iteration did not converge".into()))?;
    let mut eigenvalues: Vec<Complex64> = schur
        .eigenvalues()
        .ok_or_else(|| RenormError::Numerical("Schur form has no eigenvalues".into()))?
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let delta = eigenvalues[0];
    let stable_radius = eigenvalues.get(1).map_or(0.0, |l| l.norm());
    let expanding_count = eigenvalues.iter().filter(|l| l.norm() > 1.0).count();
    let unit_band_count = eigenvalues[1..]
        .iter()
        .filter(|l| (l.norm() - 1.0).abs() <= SPECTRAL_GAP)
        .count();
    let top_tie = n > 1 && delta.norm() - stable_radius <= TIE_TOL;
    let hyperbolic = expanding_count == 1
        && !top_tie
        && delta.norm() > 1.0 + SPECTRAL_GAP
        && stable_radius < 1.0 - SPECTRAL_GAP;
    Ok(SpectrumReport {
        conjugation_defect: conjugation_defect(&eigenvalues),
        eigenvalues,
        delta,
        stable_radius,
        truncation_order,
        expanding_count,
        unit_band_count,
        top_tie,
        hyperbolic,
    })
}

/// Spectral projection onto the expanding direction at a fixed point, used to
/// keep iterates on the stable manifold.
#[derive(Clone, Debug)]
pub struct UnstableProjection {
    pub eigenvalue: Complex64,
    right: DVector<Complex64>,
    left: DVector<Complex64>,
    center: DVector<Complex64>,
}

fn inverse_iteration(m: &DMatrix<Complex64>, shift: Complex64) -> Result<DVector<Complex64>, RenormError> {
    let n = m.nrows();
    let shifted = m - DMatrix::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut x = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..6 {
        let y = lu
            .solve(&x)
            .ok_or_else(|| RenormError::Numerical("singular shifted matrix".into()))?;
        let norm = y.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(RenormError::Numerical("inverse iteration broke down".into()));
        }
        x = y / Complex64::new(norm, 0.0);
    }
    Ok(x)
}

impl UnstableProjection {
    /// Right and left eigenvectors of `j` for `eigenvalue`, from inverse
    /// iteration with a slightly perturbed shift, scaled so that `l · u = 1`.
    pub fn new(j: &DMatrix<Complex64>, eigenvalue: Complex64, center: &Germ) -> Result<Self, RenormError> {
        let shift = eigenvalue * (1.0 + 1e-10);
        let right = inverse_iteration(j, shift)?;
        let left = inverse_iteration(&j.transpose(), shift)?;
        let pairing = left.transpose() * &right;
        let s = pairing[(0, 0)];
        if s.norm() < 1e-12 {
            return Err(RenormError::Numerical("left and right eigenvectors are orthogonal".into()));
        }
        Ok(Self {
            eigenvalue,
            right,
            left: left / s,
            center: DVector::from_vec(center.free_coords()),
        })
    }

    /// Coordinate of `g - center` along the expanding direction.
    pub fn component(&self, g: &Germ) -> Complex64 {
        let x = DVector::from_vec(g.free_coords()) - &self.center;
        (self.left.transpose() * x)[(0, 0)]
    }

    /// Removes the expanding component of `g - center`.
    pub fn project(&self, g: &Germ) -> Result<Germ, RenormError> {
        let t = self.component(g);
        let x = DVector::from_vec(g.free_coords()) - &self.right * t;
        Germ::from_free(x.as_slice(), g.order(), g.disk_radius())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(d: &[f64]) -> DMatrix<Complex64> {
        DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&x| Complex64::new(x, 0.0))))
    }

    #[test]
    fn identity_is_not_hyperbolic() {
        let r = eigen_spectrum(&real(&[1.0, 1.0, 1.0]), 6).unwrap();
        assert!(r.eigenvalues.iter().all(|l| (l - 1.0).norm() < 1e-12));
        assert!(!r.hyperbolic);
    }

    #[test]
    fn diagonal_case() {
        let r = eigen_spectrum(&real(&[0.1, 4.7, 0.3]), 6).unwrap();
        assert!((r.delta - 4.7).norm() < 1e-12);
        assert!((r.stable_radius - 0.3).abs() < 1e-12);
        assert!(r.hyperbolic);
    }

    #[test]
    fn tie_at_the_top_is_rejected() {
        let r = eigen_spectrum(&real(&[3.0, -3.0, 0.2]), 6).unwrap();
        assert!(r.top_tie && !r.hyperbolic);
    }

    #[test]
    fn rotation_spectrum_is_conjugation_symmetric() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0].map(|x| Complex64::new(x, 0.0)));
        let r = eigen_spectrum(&m, 4).unwrap();
        assert!(r.conjugation_defect < 1e-12);
        assert!((r.eigenvalues[0].norm() - 2.0).abs() < 1e-12);
    }
}
