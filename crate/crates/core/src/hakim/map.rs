use nalgebra::DMatrix;
use num_complex::Complex64;

use super::HakimError;
use crate::series::{MultiPoly, MAX_VARS};

/// `y`-contraction must have spectral radius below `1 - CONTRACTION_MARGIN`.
pub const CONTRACTION_MARGIN: f64 = 1e-6;
const ORIGIN_TOL: f64 = 1e-12;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `x' = F(x, y)`, `y' = G(y) + x h(x, y)` in variables `(x, y_1..y_m)`
/// truncated at a common total degree. The `y`-components are stored whole
/// and split into `G` and `h` on demand.
#[derive(Clone, Debug, PartialEq)]
pub struct SemiAttractiveMap {
    f: MultiPoly,
    y: Vec<MultiPoly>,
}

pub(crate) fn spectral_radius(a: &DMatrix<Complex64>) -> Result<f64, HakimError> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| HakimError::InvalidMap("eigensolve of DG(0) failed".into()))?;
    Ok(schur
        .eigenvalues()
        .map(|e| e.iter().map(|l| l.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY))
}

impl SemiAttractiveMap {
    pub fn new(f: MultiPoly, g: Vec<MultiPoly>, h: Vec<MultiPoly>) -> Result<Self, HakimError> {
        if g.len() != h.len() {
            return Err(HakimError::InvalidMap(format!(
                "{} contraction components but {} coupling components",
                g.len(),
                h.len()
            )));
        }
        if let Some(i) = g.iter().position(|gi| gi.depends_on(0)) {
            return Err(HakimError::InvalidMap(format!("G_{i} depends on x")));
        }
        let y = g
            .iter()
            .zip(&h)
            .map(|(gi, hi)| gi.add(&hi.shift(0, 1)))
            .collect::<Result<_, _>>()?;
        Self::from_components(f, y)
    }

    /// The map from its `x`-component and full `y`-components.
    pub fn from_components(f: MultiPoly, y: Vec<MultiPoly>) -> Result<Self, HakimError> {
        let nvars = 1 + y.len();
        if nvars > MAX_VARS {
            return Err(HakimError::InvalidMap(format!("m = {} exceeds {}", y.len(), MAX_VARS - 1)));
        }
        if f.nvars() != nvars || y.iter().any(|p| p.nvars() != nvars) {
            return Err(HakimError::InvalidMap("components disagree on the variable count".into()));
        }
        if y.iter().any(|p| p.degree_cap() != f.degree_cap()) {
            return Err(HakimError::InvalidMap("components disagree on the degree cap".into()));
        }
        let t = Self { f, y };
        if t.f.constant_term().norm() > ORIGIN_TOL || t.y.iter().any(|p| p.constant_term().norm() > ORIGIN_TOL) {
            return Err(HakimError::InvalidMap("origin is not fixed".into()));
        }
        let r = spectral_radius(&t.linear_y())?;
        if !(r < 1.0 - CONTRACTION_MARGIN) {
            return Err(HakimError::InvalidMap(format!("DG(0) has spectral radius {r}")));
        }
        Ok(t)
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn nvars(&self) -> usize {
        self.f.nvars()
    }

    pub fn degree_cap(&self) -> u32 {
        self.f.degree_cap()
    }

    pub fn x_component(&self) -> &MultiPoly {
        &self.f
    }

    pub fn y_components(&self) -> &[MultiPoly] {
        &self.y
    }

    /// `G(y) = y'(0, y)`.
    pub fn g(&self) -> Vec<MultiPoly> {
        self.y.iter().map(|p| p.coefficient_of(0, 0)).collect()
    }

    /// `h = (y' - G) / x`.
    pub fn h(&self) -> Vec<MultiPoly> {
        self.y.iter().map(|p| p.divide_by_variable(0)).collect()
    }

    /// `a_i(y)`, the coefficient of `x^i` in `F`.
    pub fn a(&self, i: u8) -> MultiPoly {
        self.f.coefficient_of(0, i)
    }

    /// `DG(0)`: entry `(i, j)` is the coefficient of `y_j` in `G_i`.
    pub fn linear_y(&self) -> DMatrix<Complex64> {
        let m = self.m();
        DMatrix::from_fn(m, m, |i, j| {
            let mut e = [0u8; MAX_VARS];
            e[j + 1] = 1;
            self.y[i].coeff(&e[..m + 1])
        })
    }

    pub fn contraction_radius(&self) -> f64 {
        spectral_radius(&self.linear_y()).unwrap_or(f64::INFINITY)
    }

    /// `∂F/∂y_j` at the origin, `j = 1..m`.
    pub fn f_linear_y(&self) -> Vec<Complex64> {
        let m = self.m();
        (0..m)
            .map(|j| {
                let mut e = [0u8; MAX_VARS];
                e[j + 1] = 1;
                self.f.coeff(&e[..m + 1])
            })
            .collect()
    }

    pub fn apply(&self, x: Complex64, y: &[Complex64]) -> (Complex64, Vec<Complex64>) {
        let mut point = Vec::with_capacity(1 + y.len());
        point.push(x);
        point.extend_from_slice(y);
        (self.f.eval(&point), self.y.iter().map(|p| p.eval(&point)).collect())
    }

    /// Largest coefficientwise difference over all components.
    pub fn max_coeff_diff(&self, other: &Self) -> Result<f64, HakimError> {
        let mut worst = self.f.sub(&other.f)?.max_abs_coeff();
        for (a, b) in self.y.iter().zip(&other.y) {
            worst = worst.max(a.sub(b)?.max_abs_coeff());
        }
        Ok(worst)
    }

    pub(crate) fn coordinate(&self, var: usize) -> MultiPoly {
        MultiPoly::variable(self.nvars(), self.degree_cap(), var).expect("valid space")
    }

    /// Substitution list `[x_value, y_1, ..., y_m]`.
    pub(crate) fn with_x(&self, x_value: MultiPoly) -> Vec<MultiPoly> {
        let mut subs = vec![x_value];
        subs.extend((1..self.nvars()).map(|v| self.coordinate(v)));
        subs
    }
}

/// A change of the `x` coordinate `X = φ(x, y)` (with `y` untouched) and its
/// inverse `x = φ⁻¹(X, y)`, both as polynomials truncated at the degree cap.
#[derive(Clone, Debug, PartialEq)]
pub struct ChangeOfVariables {
    pub forward: MultiPoly,
    pub inverse: MultiPoly,
}

impl ChangeOfVariables {
    pub fn identity(nvars: usize, cap: u32) -> Result<Self, HakimError> {
        let x = MultiPoly::variable(nvars, cap, 0)?;
        Ok(Self {
            forward: x.clone(),
            inverse: x,
        })
    }

    /// `X = x + p(x, y)` with the inverse found by the fixed-point iteration
    /// `x <- X - p(x, y)`. Requires `∂p/∂x` to vanish at the origin.
    pub fn near_identity(p: &MultiPoly) -> Result<Self, HakimError> {
        let (nvars, cap) = (p.nvars(), p.degree_cap());
        let x = MultiPoly::variable(nvars, cap, 0)?;
        let mut lin = [0u8; MAX_VARS];
        lin[0] = 1;
        if p.constant_term().norm() > 0.0 || p.coeff(&lin[..nvars]).norm() > 0.0 {
            return Err(HakimError::Precondition("change is not tangent to the identity".into()));
        }
        let forward = x.add(p)?;
        let mut subs: Vec<MultiPoly> = (0..nvars)
            .map(|v| MultiPoly::variable(nvars, cap, v))
            .collect::<Result<_, _>>()?;
        let mut inverse = x.clone();
        for _ in 0..=cap + 1 {
            subs[0] = inverse.clone();
            let next = x.sub(&p.compose(&subs)?)?;
            if next == inverse {
                break;
            }
            inverse = next;
        }
        Ok(Self { forward, inverse })
    }

    /// `X = v(y) x` for `v` free of `x` with `v(0) ≠ 0`.
    pub fn scaling(v: &MultiPoly) -> Result<Self, HakimError> {
        let (nvars, cap) = (v.nvars(), v.degree_cap());
        let v0 = v.constant_term();
        if v0.norm() == 0.0 || v.depends_on(0) {
            return Err(HakimError::Precondition("scaling must be a unit in y alone".into()));
        }
        // 1/v = (1/v0) Σ (1 - v/v0)^j
        let w = MultiPoly::constant(nvars, cap, ONE)?.sub(&v.scale(v0.inv()))?;
        let mut inv = MultiPoly::constant(nvars, cap, ONE)?;
        let mut power = inv.clone();
        for _ in 0..cap {
            power = power.mul(&w)?;
            if power.is_zero() {
                break;
            }
            inv = inv.add(&power)?;
        }
        let x = MultiPoly::variable(nvars, cap, 0)?;
        Ok(Self {
            forward: v.mul(&x)?,
            inverse: inv.scale(v0.inv()).mul(&x)?,
        })
    }

    /// `X = x - ψ(y)`.
    pub fn translation(psi: &MultiPoly) -> Result<Self, HakimError> {
        if psi.depends_on(0) {
            return Err(HakimError::Precondition("translation must depend on y alone".into()));
        }
        let x = MultiPoly::variable(psi.nvars(), psi.degree_cap(), 0)?;
        Ok(Self {
            forward: x.sub(psi)?,
            inverse: x.add(psi)?,
        })
    }

    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    /// The change `self` followed by `next`.
    pub fn then(&self, next: &Self) -> Result<Self, HakimError> {
        let nvars = self.forward.nvars();
        let cap = self.forward.degree_cap();
        let mut subs: Vec<MultiPoly> = (0..nvars)
            .map(|v| MultiPoly::variable(nvars, cap, v))
            .collect::<Result<_, _>>()?;
        subs[0] = self.forward.clone();
        let forward = next.forward.compose(&subs)?;
        subs[0] = next.inverse.clone();
        let inverse = self.inverse.compose(&subs)?;
        Ok(Self { forward, inverse })
    }
}

/// `Φ ∘ T ∘ Φ⁻¹` for `Φ(x, y) = (φ(x, y), y)`.
pub fn conjugate(t: &SemiAttractiveMap, change: &ChangeOfVariables) -> Result<SemiAttractiveMap, HakimError> {
    let back = t.with_x(change.inverse.clone());
    let f1 = t.f.compose(&back)?;
    let y1: Vec<MultiPoly> = t.y.iter().map(|p| p.compose(&back)).collect::<Result<_, _>>()?;
    let mut image = vec![f1];
    image.extend(y1.iter().cloned());
    let f2 = change.forward.compose(&image)?;
    SemiAttractiveMap::from_components(f2, y1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn sample() -> SemiAttractiveMap {
        let f = MultiPoly::from_terms(2, 6, [(vec![1, 0], c(1.0)), (vec![2, 0], c(1.0)), (vec![0, 2], c(1.0))]).unwrap();
        let g = MultiPoly::from_terms(2, 6, [(vec![0, 1], c(0.5))]).unwrap();
        let h = MultiPoly::from_terms(2, 6, [(vec![1, 0], c(1.0))]).unwrap();
        SemiAttractiveMap::new(f, vec![g], vec![h]).unwrap()
    }

    #[test]
    fn split_into_g_and_h() {
        let t = sample();
        assert_eq!(t.g()[0].coeff(&[0, 1]), c(0.5));
        assert_eq!(t.h()[0].coeff(&[1, 0]), c(1.0));
        assert!((t.contraction_radius() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_expanding_y() {
        let f = MultiPoly::variable(2, 4, 0).unwrap();
        let g = MultiPoly::from_terms(2, 4, [(vec![0, 1], c(1.5))]).unwrap();
        let h = MultiPoly::zero(2, 4).unwrap();
        assert!(SemiAttractiveMap::new(f, vec![g], vec![h]).is_err());
    }

    #[test]
    fn near_identity_inverse_composes_to_identity() {
        let p = MultiPoly::from_terms(2, 8, [(vec![2, 1], c(0.7)), (vec![3, 0], c(-0.4))]).unwrap();
        let ch = ChangeOfVariables::near_identity(&p).unwrap();
        let y = MultiPoly::variable(2, 8, 1).unwrap();
        let id = ch.forward.compose(&[ch.inverse.clone(), y]).unwrap();
        let x = MultiPoly::variable(2, 8, 0).unwrap();
        assert!(id.sub(&x).unwrap().max_abs_coeff() < 1e-12);
    }

    #[test]
    fn conjugation_round_trip() {
        let t = sample();
        let v = MultiPoly::from_terms(2, 6, [(vec![0, 0], c(1.0)), (vec![0, 1], c(0.3))]).unwrap();
        let ch = ChangeOfVariables::scaling(&v).unwrap();
        let there = conjugate(&t, &ch).unwrap();
        let back = conjugate(&there, &ch.inverted()).unwrap();
        assert!(back.max_coeff_diff(&t).unwrap() < 1e-12);
    }
}
