//! Algebraic laws of the series kernel, each returning the observed defect
//! relative to the size of the operands.

use num_complex::Complex64;
use renorm_core::series::TruncatedSeries;

use super::{coeff_gap, scale};

type S = TruncatedSeries;

fn rel(a: &S, b: &S) -> f64 {
    coeff_gap(a, b) / scale(a).max(scale(b))
}

pub fn add_commutes(f: &S, g: &S) -> f64 {
    rel(&f.add(g).unwrap(), &g.add(f).unwrap())
}

pub fn add_associates(f: &S, g: &S, h: &S) -> f64 {
    rel(&f.add(g).unwrap().add(h).unwrap(), &f.add(&g.add(h).unwrap()).unwrap())
}

pub fn additive_inverse(f: &S) -> f64 {
    f.sub(f).unwrap().max_coeff() / scale(f)
}

pub fn mul_commutes(f: &S, g: &S) -> f64 {
    rel(&f.multiply(g).unwrap(), &g.multiply(f).unwrap())
}

pub fn mul_associates(f: &S, g: &S, h: &S) -> f64 {
    rel(
        &f.multiply(g).unwrap().multiply(h).unwrap(),
        &f.multiply(&g.multiply(h).unwrap()).unwrap(),
    )
}

pub fn distributes(f: &S, g: &S, h: &S) -> f64 {
    rel(
        &f.multiply(&g.add(h).unwrap()).unwrap(),
        &f.multiply(g).unwrap().add(&f.multiply(h).unwrap()).unwrap(),
    )
}

pub fn unit_is_neutral(f: &S) -> f64 {
    let one = S::monomial(Complex64::new(1.0, 0.0), 0, f.order(), f.disk_radius()).unwrap();
    rel(&f.multiply(&one).unwrap(), f)
}

/// `‖f + g‖ - ‖f‖ - ‖g‖`, positive only on violation.
pub fn norm_subadditive(f: &S, g: &S, r: f64) -> f64 {
    let n = |s: &S| s.disk_norm_bound(r).unwrap();
    (n(&f.add(g).unwrap()) - n(f) - n(g)) / (1.0 + n(f) + n(g))
}

/// `‖f g‖ - ‖f‖ ‖g‖`, positive only on violation.
pub fn norm_submultiplicative(f: &S, g: &S, r: f64) -> f64 {
    let n = |s: &S| s.disk_norm_bound(r).unwrap();
    (n(&f.multiply(g).unwrap()) - n(f) * n(g)) / (1.0 + n(f) * n(g))
}

fn compose(f: &S, g: &S) -> S {
    f.compose_with_threshold(g, f64::INFINITY).unwrap()
}

/// `(f ∘ g) ∘ h = f ∘ (g ∘ h)` for inner series without constant term.
pub fn compose_associates(f: &S, g: &S, h: &S) -> f64 {
    rel(&compose(&compose(f, g), h), &compose(f, &compose(g, h)))
}

/// `A_b A_a f = A_{ab} f` for the affine conjugation `A_a f = a^{-1} f(a z)`.
pub fn conjugation_group_law(f: &S, a: Complex64, b: Complex64) -> f64 {
    let two = f.affine_conjugate(a).unwrap().affine_conjugate(b).unwrap();
    let one = f.affine_conjugate(a * b).unwrap();
    let radius_gap = (two.disk_radius() - one.disk_radius()).abs() / one.disk_radius();
    rel(&two, &one).max(radius_gap)
}

/// `A_a (f ∘ g) = A_a f ∘ A_a g`.
pub fn conjugation_respects_composition(f: &S, g: &S, a: Complex64) -> f64 {
    let lhs = compose(f, g).affine_conjugate(a).unwrap();
    let rhs = compose(&f.affine_conjugate(a).unwrap(), &g.affine_conjugate(a).unwrap());
    rel(&lhs, &rhs)
}

/// `(f ∘ g)(z)` against `f(g(z))` near the origin, for `g(0) = 0`. The
/// truncated-away part is far below the tolerance at `|z| = 0.02`.
pub fn eval_compose_consistent(f: &S, g: &S, z: Complex64) -> f64 {
    let lhs = compose(f, g).eval(z);
    let rhs = f.eval(g.eval(z));
    (lhs - rhs).norm() / (1.0 + rhs.norm())
}

/// `(f g)(z)` against `f(z) g(z)` near the origin.
pub fn eval_multiply_consistent(f: &S, g: &S, z: Complex64) -> f64 {
    let lhs = f.multiply(g).unwrap().eval(z);
    let rhs = f.eval(z) * g.eval(z);
    (lhs - rhs).norm() / (1.0 + rhs.norm())
}
