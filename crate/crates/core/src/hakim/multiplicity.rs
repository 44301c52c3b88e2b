use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{conjugate, ChangeOfVariables, HakimError, SemiAttractiveMap};
use crate::series::{MultiPoly, MAX_VARS};

/// Coefficients below this count as zero when reading a vanishing order.
pub const COEFF_TOL: f64 = 1e-12;
/// Interpolation parameters of the conjugation family.
pub const LAMBDA_SWEEP: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];
const SWEEP_RADIUS: f64 = 0.1;
const CONTOUR_TOL: f64 = 1e-10;
const MIN_NODES: usize = 32;
const MAX_NODES: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Multiplicity {
    Finite(u32),
    /// `q` vanishes through the degree cap: a curve of fixed points up to
    /// that degree.
    Infinite,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiplicityResult {
    /// `y_j(x)` for `j = 1..m`, polynomials in `x` alone.
    pub curve: Vec<MultiPoly>,
    /// `q(x) = F(x, y(x)) - x`.
    pub q: MultiPoly,
    pub multiplicity: Multiplicity,
}

/// The curve `y(x)` solving `y = G(y) + x h(x, y)`, by the iteration
/// `y <- (I - A)^{-1} (y'(x, y) - A y)` with `A = DG(0)`; each pass fixes one
/// more degree.
pub fn fixed_point_curve(t: &SemiAttractiveMap) -> Result<Vec<MultiPoly>, HakimError> {
    let (nvars, cap, m) = (t.nvars(), t.degree_cap(), t.m());
    if m == 0 {
        return Ok(Vec::new());
    }
    let a = t.linear_y();
    let lu = (DMatrix::identity(m, m) - &a).lu();
    let inv = lu
        .try_inverse()
        .ok_or_else(|| HakimError::IllPosed("I - DG(0) is singular".into()))?;
    if inv.iter().any(|c| !c.is_finite()) {
        return Err(HakimError::IllPosed("I - DG(0) is singular".into()));
    }
    let x = MultiPoly::variable(nvars, cap, 0)?;
    let mut curve = vec![MultiPoly::zero(nvars, cap)?; m];
    for _ in 0..=cap + 1 {
        let mut subs = vec![x.clone()];
        subs.extend(curve.iter().cloned());
        let images: Vec<MultiPoly> = t
            .y_components()
            .iter()
            .map(|p| p.compose(&subs))
            .collect::<Result<_, _>>()?;
        let mut next = Vec::with_capacity(m);
        for i in 0..m {
            let mut acc = MultiPoly::zero(nvars, cap)?;
            for k in 0..m {
                // (y'(x, y) - A y)_k
                let mut r = images[k].clone();
                for j in 0..m {
                    r = r.axpy(-a[(k, j)], &curve[j])?;
                }
                acc = acc.axpy(inv[(i, k)], &r)?;
            }
            next.push(acc);
        }
        if next == curve {
            break;
        }
        curve = next;
    }
    Ok(curve)
}

/// Vanishing order of `q(x) = F(x, y(x)) - x` along the fixed-point curve.
pub fn multiplicity(t: &SemiAttractiveMap) -> Result<MultiplicityResult, HakimError> {
    let curve = fixed_point_curve(t)?;
    let x = MultiPoly::variable(t.nvars(), t.degree_cap(), 0)?;
    let mut subs = vec![x.clone()];
    subs.extend(curve.iter().cloned());
    let q = t.x_component().compose(&subs)?.sub(&x)?;
    let multiplicity = match q.order(COEFF_TOL) {
        Some(d) => Multiplicity::Finite(d),
        None => Multiplicity::Infinite,
    };
    Ok(MultiplicityResult { curve, q, multiplicity })
}

/// Number of zeros of `q` (a polynomial in the first variable only) inside
/// `|x| < radius`, as the winding number of `q` around that circle.
///
/// The trapezoid rule for `(1/2πi) ∮ q'/q` is exact for the truncated
/// integrand's Fourier modes below the node count, so nodes are doubled from
/// 32 until two successive rounded values agree and sit close to an integer.
pub fn count_zeros(q: &MultiPoly, radius: f64) -> Result<i64, HakimError> {
    if (1..q.nvars()).any(|v| q.depends_on(v)) {
        return Err(HakimError::Precondition("count_zeros needs a polynomial in x alone".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(HakimError::Precondition(format!("invalid contour radius {radius}")));
    }
    let dq = q.partial_derivative(0);
    let mut point = [Complex64::new(0.0, 0.0); MAX_VARS];
    let nvars = q.nvars();
    let mut winding = |nodes: usize| -> Result<f64, HakimError> {
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..nodes {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let x = Complex64::from_polar(radius, theta);
            point[0] = x;
            let value = q.eval(&point[..nvars]);
            if value.norm() < CONTOUR_TOL {
                return Err(HakimError::ContourUnsafe {
                    radius,
                    modulus: value.norm(),
                });
            }
            sum += x * dq.eval(&point[..nvars]) / value;
        }
        Ok((sum / nodes as f64).re)
    };
    let mut nodes = MIN_NODES;
    let mut prev = winding(nodes)?;
    while nodes < MAX_NODES {
        nodes *= 2;
        let cur = winding(nodes)?;
        if cur.round() == prev.round() && (cur - cur.round()).abs() < 1e-6 {
            return Ok(cur.round() as i64);
        }
        prev = cur;
    }
    Err(HakimError::QuadratureFailure(radius))
}

#[derive(Clone, Debug, PartialEq)]
pub struct InvarianceResult {
    pub original: Multiplicity,
    pub conjugated: Multiplicity,
    /// `(λ, zero count of q_λ on |x| = radius)`.
    pub sweep: Vec<(f64, i64)>,
    pub radius: f64,
}

impl InvarianceResult {
    pub fn holds(&self) -> bool {
        let Multiplicity::Finite(n) = self.original else {
            return false;
        };
        self.original == self.conjugated && self.sweep.iter().all(|&(_, c)| c == n as i64)
    }
}

/// `W_λ(x, y) = (x + λ v(y) x^k, y)`.
fn family_member(v: &MultiPoly, k: u8, lambda: f64) -> Result<ChangeOfVariables, HakimError> {
    let p = v.shift(0, k).scale(Complex64::new(lambda, 0.0));
    // Coordinates with W as the inverse realise W⁻¹ ∘ T ∘ W.
    Ok(ChangeOfVariables::near_identity(&p)?.inverted())
}

/// Multiplicity of `T` and of `W⁻¹ ∘ T ∘ W` for `W = W_1`, plus zero counts of
/// `q_λ` for every `λ` of [`LAMBDA_SWEEP`] on a circle of radius `0.1`.
pub fn multiplicity_invariance(
    t: &SemiAttractiveMap,
    v: &MultiPoly,
    k: u32,
) -> Result<InvarianceResult, HakimError> {
    if k < 2 {
        return Err(HakimError::Precondition(format!("k = {k} must exceed 1")));
    }
    if k >= t.degree_cap() {
        return Err(HakimError::DegreeCap(format!(
            "x^{k} does not fit below the degree cap {}",
            t.degree_cap()
        )));
    }
    if v.depends_on(0) {
        return Err(HakimError::Precondition("v must depend on y alone".into()));
    }
    let base = multiplicity(t)?;
    if base.multiplicity == Multiplicity::Infinite {
        return Err(HakimError::Precondition("multiplicity of T is infinite".into()));
    }
    let mut sweep = Vec::new();
    let mut conjugated = base.multiplicity;
    for &lambda in &LAMBDA_SWEEP {
        let tl = conjugate(t, &family_member(v, k as u8, lambda)?)?;
        let res = multiplicity(&tl)?;
        sweep.push((lambda, count_zeros(&res.q, SWEEP_RADIUS)?));
        if lambda == 1.0 {
            conjugated = res.multiplicity;
        }
    }
    Ok(InvarianceResult {
        original: base.multiplicity,
        conjugated,
        sweep,
        radius: SWEEP_RADIUS,
    })
}
