#![allow(dead_code)]

pub mod laws;

use num_complex::Complex64;
use proptest::prelude::*;
use renorm_core::series::TruncatedSeries;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn complex_unit() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| c(re, im))
}

/// Series of the given order with coefficients in the unit square.
pub fn series_of_order(order: usize, radius: f64) -> impl Strategy<Value = TruncatedSeries> {
    proptest::collection::vec(complex_unit(), order + 1)
        .prop_map(move |v| TruncatedSeries::new(v, radius).unwrap())
}

/// A triple of series sharing an order in `2..=12` and a unit disk.
pub fn series_triple() -> impl Strategy<Value = (TruncatedSeries, TruncatedSeries, TruncatedSeries)> {
    (2usize..=12).prop_flat_map(|n| (series_of_order(n, 1.0), series_of_order(n, 1.0), series_of_order(n, 1.0)))
}

/// Same as [`series_triple`] but with vanishing constant terms, so that
/// composition is exact modulo `z^{N+1}`.
pub fn inner_triple() -> impl Strategy<Value = (TruncatedSeries, TruncatedSeries, TruncatedSeries)> {
    series_triple().prop_map(|(mut a, mut b, mut d)| {
        for s in [&mut a, &mut b, &mut d] {
            s.set_coeff(0, c(0.0, 0.0));
        }
        (a, b, d)
    })
}

pub fn coeff_gap(a: &TruncatedSeries, b: &TruncatedSeries) -> f64 {
    assert_eq!(a.order(), b.order());
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn scale(a: &TruncatedSeries) -> f64 {
    1.0 + a.max_coeff()
}

/// Pair of series of order `10..=16` with `g(0) = 0` and a point with
/// `|z| <= 0.02`, where the truncation error of `f ∘ g` is negligible.
pub fn eval_case() -> impl Strategy<Value = (TruncatedSeries, TruncatedSeries, Complex64)> {
    (10usize..=16)
        .prop_flat_map(|n| (series_of_order(n, 1.0), series_of_order(n, 1.0), complex_unit()))
        .prop_map(|(f, mut g, z)| {
            g.set_coeff(0, c(0.0, 0.0));
            (f, g, z * 0.014)
        })
}

/// Nonzero scale factors with modulus in `[0.5, 2]`.
pub fn scale_factor() -> impl Strategy<Value = Complex64> {
    (0.5..2.0f64, -std::f64::consts::PI..std::f64::consts::PI).prop_map(|(m, t)| Complex64::from_polar(m, t))
}
