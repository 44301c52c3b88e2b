use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{conjugate, ChangeOfVariables, HakimError, SemiAttractiveMap};
use crate::series::{Monomial, MultiPoly, MAX_VARS};

/// Infinite products and sums stop once a term is below this in every
/// coefficient.
const SERIES_TOL: f64 = 1e-14;
const MAX_TERMS: usize = 200;
const PIVOT_TOL: f64 = 1e-12;
const PRE_TOL: f64 = 1e-10;

const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stage {
    StraightenStableManifold,
    NormalizeLinearCoefficient,
    RemoveYDependence(u32),
}

impl Stage {
    pub fn tag(&self) -> String {
        match self {
            Stage::StraightenStableManifold => "straighten-stable-manifold".into(),
            Stage::NormalizeLinearCoefficient => "normalize-a1".into(),
            Stage::RemoveYDependence(d) => format!("remove-y-dependence-a{d}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub stage: Stage,
    pub change: ChangeOfVariables,
    /// The map before this stage.
    pub before: SemiAttractiveMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormLog {
    pub input: SemiAttractiveMap,
    /// Graph of the stable manifold `x = ψ(y)`.
    pub psi: MultiPoly,
    /// Multiplier of the linear normalization.
    pub v_product: MultiPoly,
    /// Multiplier per degree of the `y`-dependence removal, starting at `a_2`.
    pub v_sums: Vec<MultiPoly>,
    pub result: SemiAttractiveMap,
    pub stages: Vec<StageRecord>,
}

impl NormalFormLog {
    /// All recorded changes composed in order.
    pub fn total_change(&self) -> Result<ChangeOfVariables, HakimError> {
        let mut total = ChangeOfVariables::identity(self.input.nvars(), self.input.degree_cap())?;
        for s in &self.stages {
            total = total.then(&s.change)?;
        }
        Ok(total)
    }

    /// Coefficientwise distance between the input conjugated by the composed
    /// change and the recorded result.
    pub fn replay_residual(&self) -> Result<f64, HakimError> {
        conjugate(&self.input, &self.total_change()?)?.max_coeff_diff(&self.result)
    }

    /// Worst distance over stages between the map before a stage and the map
    /// after it conjugated back by the inverse change.
    pub fn stage_round_trip_residual(&self) -> Result<f64, HakimError> {
        let mut worst: f64 = 0.0;
        for (i, s) in self.stages.iter().enumerate() {
            let after = self.stages.get(i + 1).map_or(&self.result, |n| &n.before);
            let back = conjugate(after, &s.change.inverted())?;
            worst = worst.max(back.max_coeff_diff(&s.before)?);
        }
        Ok(worst)
    }

    fn merge(mut self, later: NormalFormLog) -> Self {
        self.stages.extend(later.stages);
        self.v_sums.extend(later.v_sums);
        self.result = later.result;
        self
    }
}

/// Largest coefficient of `F(0, y)`.
pub fn stable_manifold_defect(t: &SemiAttractiveMap) -> f64 {
    t.a(0).max_abs_coeff()
}

/// Largest coefficient of `a_1(y) - 1`.
pub fn linear_defect(t: &SemiAttractiveMap) -> f64 {
    let one = MultiPoly::constant(t.nvars(), t.degree_cap(), ONE).expect("valid space");
    t.a(1).sub(&one).expect("same space").max_abs_coeff()
}

/// Largest `y`-dependent coefficient of `a_i` for `i` in `lo..=hi`.
pub fn y_dependence_defect(t: &SemiAttractiveMap, lo: u8, hi: u8) -> f64 {
    (lo..=hi)
        .map(|i| t.a(i).filter(|m| m.degree() > 0).max_abs_coeff())
        .fold(0.0, f64::max)
}

/// Exponent tuples of total degree `d` in the `y` variables (slot 0 zero).
fn y_monomials(nvars: usize, d: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut e = [0u8; MAX_VARS];
    fn rec(slot: usize, nvars: usize, left: u32, e: &mut [u8; MAX_VARS], out: &mut Vec<Monomial>) {
        if slot == nvars - 1 {
            e[slot] = left as u8;
            out.push(Monomial::new(&e[..nvars]));
            return;
        }
        for k in (0..=left).rev() {
            e[slot] = k as u8;
            rec(slot + 1, nvars, left - k, e, out);
        }
        e[slot] = 0;
    }
    if nvars > 1 {
        rec(1, nvars, d, &mut e, &mut out);
    }
    out
}

/// `[0, p_1, ..., p_m]` to evaluate a `y`-polynomial at `y = p`.
fn y_subs(t: &SemiAttractiveMap, ys: &[MultiPoly]) -> Vec<MultiPoly> {
    let mut subs = vec![MultiPoly::zero(t.nvars(), t.degree_cap()).expect("valid space")];
    subs.extend(ys.iter().cloned());
    subs
}

fn identity_ys(t: &SemiAttractiveMap) -> Vec<MultiPoly> {
    (1..t.nvars()).map(|v| t.coordinate(v)).collect()
}

/// Graph `x = ψ(y)` of the stable manifold, degree by degree from
/// `ψ(y'(ψ(y), y)) = F(ψ(y), y)`, and the map conjugated by `X = x - ψ(y)`.
pub fn straighten_stable_manifold(t: &SemiAttractiveMap) -> Result<(SemiAttractiveMap, MultiPoly), HakimError> {
    let (nvars, cap) = (t.nvars(), t.degree_cap());
    if let Some(b) = t.f_linear_y().iter().find(|b| b.norm() > PRE_TOL) {
        return Err(HakimError::Precondition(format!(
            "∂F/∂y at the origin must vanish, found {b}"
        )));
    }
    let mut psi = MultiPoly::zero(nvars, cap)?;
    if t.m() == 0 {
        return Ok((t.clone(), psi));
    }
    let a10 = t.a(1).constant_term();
    let g = t.g();
    let lin: Vec<MultiPoly> = g.iter().map(|p| p.homogeneous_part(1)).collect();
    for d in 2..=cap {
        let on_graph = t.with_x(psi.clone());
        let fx = t.x_component().compose(&on_graph)?;
        let ys: Vec<MultiPoly> = t
            .y_components()
            .iter()
            .map(|p| p.compose(&on_graph))
            .collect::<Result<_, _>>()?;
        let lhs = psi.compose(&y_subs(t, &ys))?;
        let defect = lhs.sub(&fx)?.homogeneous_part(d);
        if defect.is_zero() {
            continue;
        }
        let basis = y_monomials(nvars, d);
        let nb = basis.len();
        let index = |m: &Monomial| basis.iter().position(|b| b == m);
        let mut l = DMatrix::<Complex64>::zeros(nb, nb);
        for (col, mono) in basis.iter().enumerate() {
            let p = MultiPoly::monomial(nvars, cap, &mono.exps()[..nvars], ONE)?;
            let image = p.compose(&y_subs(t, &lin))?.sub(&p.scale(a10))?;
            for (m, c) in image.terms() {
                if let Some(row) = index(&m) {
                    l[(row, col)] += c;
                }
            }
        }
        let rhs = DVector::from_iterator(nb, basis.iter().map(|m| -defect.coeff(&m.exps()[..nvars])));
        let lu = l.lu();
        let pivot = lu.u().diagonal().iter().map(|c| c.norm()).fold(f64::INFINITY, f64::min);
        if !(pivot > PIVOT_TOL) {
            return Err(HakimError::NormalForm {
                degree: d,
                message: format!("resonant graph equation (pivot {pivot:e})"),
            });
        }
        let sol = lu.solve(&rhs).ok_or_else(|| HakimError::NormalForm {
            degree: d,
            message: "singular graph equation".into(),
        })?;
        let step = MultiPoly::from_terms(
            nvars,
            cap,
            basis.iter().zip(sol.iter()).map(|(m, &c)| (m.exps()[..nvars].to_vec(), c)),
        )?;
        psi = psi.add(&step)?;
    }
    let change = ChangeOfVariables::translation(&psi)?;
    Ok((conjugate(t, &change)?, psi))
}

fn check_straight(t: &SemiAttractiveMap) -> Result<(), HakimError> {
    let defect = stable_manifold_defect(t);
    if defect > PRE_TOL {
        return Err(HakimError::Precondition(format!(
            "stable manifold not straightened (|F(0, y)| = {defect:e})"
        )));
    }
    Ok(())
}

/// `v(y) = Π_{i≥0} a_1(G^i(y))` and the map conjugated by `X = v(y) x`.
///
/// Factors are taken until their `y`-dependent part is below `1e-14`; the
/// constant `a_1(0)` (within `1e-10` of one) is left as it is.
pub fn normalize_a1(t: &SemiAttractiveMap) -> Result<(SemiAttractiveMap, MultiPoly), HakimError> {
    let a1 = t.a(1);
    let a10 = a1.constant_term();
    if (a10 - 1.0).norm() > PRE_TOL {
        return Err(HakimError::Precondition(format!("a_1(0) = {a10} is not 1")));
    }
    check_straight(t)?;
    let g = t.g();
    let mut orbit = identity_ys(t);
    let mut v = MultiPoly::constant(t.nvars(), t.degree_cap(), ONE)?;
    let mut converged = false;
    for _ in 0..MAX_TERMS {
        let factor = a1.compose(&y_subs(t, &orbit))?;
        v = v.mul(&factor.scale(a10.inv()))?;
        if factor.filter(|m| m.degree() > 0).max_abs_coeff() < SERIES_TOL {
            converged = true;
            break;
        }
        orbit = g.iter().map(|p| p.compose(&y_subs(t, &orbit))).collect::<Result<_, _>>()?;
    }
    if !converged {
        return Err(HakimError::ContractionTooWeak {
            stage: "linear normalization product".into(),
            terms: MAX_TERMS,
        });
    }
    let change = ChangeOfVariables::scaling(&v)?;
    Ok((conjugate(t, &change)?, v))
}

/// For each degree `n + 1 = 2..=up_to` in turn, conjugates by
/// `X = x + v(y) x^{n+1}` with `v(y) = Σ_{i≥0} (a_{n+1}(G^i(y)) - a_{n+1}(0))`,
/// which makes `a_{n+1}` constant.
pub fn kill_y_dependence(t: &SemiAttractiveMap, up_to: u32) -> Result<NormalFormLog, HakimError> {
    let (nvars, cap) = (t.nvars(), t.degree_cap());
    if up_to + 1 > cap {
        return Err(HakimError::DegreeCap(format!("up_to = {up_to} needs cap > {up_to}, have {cap}")));
    }
    let defect = linear_defect(t);
    if defect > PRE_TOL {
        return Err(HakimError::Precondition(format!("a_1 is not identically 1 (defect {defect:e})")));
    }
    let mut current = t.clone();
    let mut stages = Vec::new();
    let mut sums = Vec::new();
    let g = t.g();
    for deg in 2..=up_to {
        let a = current.a(deg as u8);
        let w = a.filter(|m| m.degree() > 0);
        let mut v = MultiPoly::zero(nvars, cap)?;
        let mut orbit = identity_ys(&current);
        let mut converged = w.is_zero();
        if !converged {
            for _ in 0..MAX_TERMS {
                let term = w.compose(&y_subs(&current, &orbit))?;
                v = v.add(&term)?;
                if term.max_abs_coeff() < SERIES_TOL {
                    converged = true;
                    break;
                }
                orbit = g
                    .iter()
                    .map(|p| p.compose(&y_subs(&current, &orbit)))
                    .collect::<Result<_, _>>()?;
            }
        }
        if !converged {
            return Err(HakimError::ContractionTooWeak {
                stage: format!("y-dependence sum at degree {deg}"),
                terms: MAX_TERMS,
            });
        }
        let change = ChangeOfVariables::near_identity(&v.shift(0, deg as u8))?;
        let next = conjugate(&current, &change)?;
        stages.push(StageRecord {
            stage: Stage::RemoveYDependence(deg),
            change,
            before: current,
        });
        sums.push(v);
        current = next;
    }
    Ok(NormalFormLog {
        input: t.clone(),
        psi: MultiPoly::zero(nvars, cap)?,
        v_product: MultiPoly::constant(nvars, cap, ONE)?,
        v_sums: sums,
        result: current,
        stages,
    })
}

/// The full chain: straightening, linear normalization, then `y`-dependence
/// removal through degree `up_to`.
pub fn reduce(t: &SemiAttractiveMap, up_to: u32) -> Result<NormalFormLog, HakimError> {
    let (straight, psi) = straighten_stable_manifold(t)?;
    let (normal, v) = normalize_a1(&straight)?;
    let first = NormalFormLog {
        input: t.clone(),
        psi: psi.clone(),
        v_product: v.clone(),
        v_sums: Vec::new(),
        result: normal.clone(),
        stages: vec![
            StageRecord {
                stage: Stage::StraightenStableManifold,
                change: ChangeOfVariables::translation(&psi)?,
                before: t.clone(),
            },
            StageRecord {
                stage: Stage::NormalizeLinearCoefficient,
                change: ChangeOfVariables::scaling(&v)?,
                before: straight,
            },
        ],
    };
    Ok(first.merge(kill_y_dependence(&normal, up_to)?))
}
