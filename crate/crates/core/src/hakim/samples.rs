//! Toy maps with known multiplicity and random generators of admissible maps
//! and conjugations.

use num_complex::Complex64;
use rand::Rng;

use super::{HakimError, SemiAttractiveMap};
use crate::series::{Monomial, MultiPoly, MAX_VARS};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn terms(nvars: usize, cap: u32, t: &[(&[u8], f64)]) -> MultiPoly {
    MultiPoly::from_terms(nvars, cap, t.iter().map(|(e, v)| (e.to_vec(), c(*v)))).expect("valid terms")
}

/// `x' = x + x^3 + x^2 y, y' = y/2 + x^2` (multiplicity 3) or
/// `x' = x + x^4 + x^2 y^2, y' = y/2 + x^2` (multiplicity 4).
pub fn toy_map(multiplicity: u32, cap: u32) -> Result<SemiAttractiveMap, HakimError> {
    let f = match multiplicity {
        3 => terms(2, cap, &[(&[1, 0], 1.0), (&[3, 0], 1.0), (&[2, 1], 1.0)]),
        4 => terms(2, cap, &[(&[1, 0], 1.0), (&[4, 0], 1.0), (&[2, 2], 1.0)]),
        _ => return Err(HakimError::Precondition(format!("no toy map of multiplicity {multiplicity}"))),
    };
    let y = terms(2, cap, &[(&[0, 1], 0.5), (&[2, 0], 1.0)]);
    SemiAttractiveMap::from_components(f, vec![y])
}

/// `x' = x - x^{k+1}` with `y' = y/2` (uncoupled) or, when coupled,
/// `x' = x - x^3 + y^2` for `k = 2` and `x' = x - x^{k+1} + x^{k+1} y` otherwise,
/// with `y' = y/2 + x^2`.
pub fn petal_map(k: u8, coupled: bool, cap: u32) -> Result<SemiAttractiveMap, HakimError> {
    if k == 0 || k as u32 + 1 > cap {
        return Err(HakimError::Precondition(format!("petal exponent {k} out of range")));
    }
    let mut f: Vec<(Vec<u8>, f64)> = vec![(vec![1, 0], 1.0), (vec![k + 1, 0], -1.0)];
    let mut y: Vec<(Vec<u8>, f64)> = vec![(vec![0, 1], 0.5)];
    if coupled {
        f.push(if k == 2 { (vec![0, 2], 1.0) } else { (vec![k + 1, 1], 1.0) });
        y.push((vec![2, 0], 1.0));
    }
    let p = |t: Vec<(Vec<u8>, f64)>| MultiPoly::from_terms(2, cap, t.into_iter().map(|(e, v)| (e, c(v))));
    SemiAttractiveMap::from_components(p(f)?, vec![p(y)?])
}

fn monomials_up_to(nvars: usize, lo: u32, hi: u32, keep: impl Fn(&[u8]) -> bool) -> Vec<Vec<u8>> {
    let base = hi as usize + 1;
    let total = base.pow(nvars as u32);
    let mut out: Vec<Vec<u8>> = (0..total)
        .map(|mut idx| {
            (0..nvars)
                .map(|_| {
                    let e = (idx % base) as u8;
                    idx /= base;
                    e
                })
                .collect::<Vec<u8>>()
        })
        .filter(|e| {
            let d: u32 = e.iter().map(|&v| v as u32).sum();
            d >= lo && d <= hi && keep(e)
        })
        .collect();
    out.sort_by_key(|e| Monomial::new(e));
    out
}

fn random_poly<R: Rng>(rng: &mut R, nvars: usize, cap: u32, exps: &[Vec<u8>], scale: f64) -> MultiPoly {
    MultiPoly::from_terms(nvars, cap, exps.iter().map(|e| (e.clone(), c(rng.gen_range(-scale..scale)))))
        .expect("valid terms")
}

/// A random semi-attractive map with `m` contracting directions: every
/// monomial of degree 2 and 3 in `F` (so `a_1(0) = 1` and `∂F/∂y = 0`), a
/// diagonal linear contraction with eigenvalues of modulus in `[0.2, 0.5]`
/// plus quadratic terms in `G`, and a coupling `h` of degree at most 2.
pub fn random_admissible_map<R: Rng>(rng: &mut R, m: usize, cap: u32) -> Result<SemiAttractiveMap, HakimError> {
    let nvars = 1 + m;
    if nvars > MAX_VARS {
        return Err(HakimError::InvalidMap(format!("m = {m} too large")));
    }
    let x = MultiPoly::variable(nvars, cap, 0)?;
    let f = x.add(&random_poly(rng, nvars, cap, &monomials_up_to(nvars, 2, 3, |_| true), 0.3))?;
    let y_only = |e: &[u8]| e[0] == 0;
    let mut g = Vec::with_capacity(m);
    let mut h = Vec::with_capacity(m);
    for j in 0..m {
        let lambda = rng.gen_range(0.2..0.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let mut e = vec![0u8; nvars];
        e[j + 1] = 1;
        let lin = MultiPoly::monomial(nvars, cap, &e, c(lambda))?;
        g.push(lin.add(&random_poly(rng, nvars, cap, &monomials_up_to(nvars, 2, 2, y_only), 0.2))?);
        h.push(random_poly(rng, nvars, cap, &monomials_up_to(nvars, 0, 2, |_| true), 0.2));
    }
    SemiAttractiveMap::new(f, g, h)
}

/// A random `v(y)` of degree at most 2 with coefficients in `(-1, 1)`.
pub fn random_conjugation<R: Rng>(rng: &mut R, nvars: usize, cap: u32) -> MultiPoly {
    random_poly(rng, nvars, cap, &monomials_up_to(nvars, 0, 2, |e| e[0] == 0), 1.0)
}
