use std::fmt::Write as _;

use num_complex::Complex64;

use super::{multiplicity, HakimError, Multiplicity, SemiAttractiveMap};
use crate::fit::least_squares;

/// Petal `{ |u^k - R| < R, |y| < ρ }` in the coordinate `u = θx` in which the
/// map reads `u' = u - u^{k+1}/k + ...`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PetalConfig {
    pub radius: f64,
    pub rho: f64,
    /// Halvings of `(R, ρ)` tried by [`adaptive_petal`].
    pub max_halvings: usize,
}

impl Default for PetalConfig {
    fn default() -> Self {
        Self {
            radius: 0.1,
            rho: 0.1,
            max_halvings: 8,
        }
    }
}

/// Inclusive range of step indices used by the fits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FitWindow {
    pub start: usize,
    pub end: usize,
}

impl FitWindow {
    pub fn tail_half(steps: usize) -> Self {
        Self {
            start: (steps / 2).max(1),
            end: steps,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PetalOrbit {
    pub points: Vec<(Complex64, Vec<Complex64>)>,
    /// Petal exponent, one less than the multiplicity.
    pub k: u32,
    /// Leading coefficient `a_{k+1}` of `q`.
    pub leading: Complex64,
    pub theta: Complex64,
    pub config: PetalConfig,
    pub window: FitWindow,
    /// Least-squares slope of `ln |x_n|` against `ln n` over the window.
    pub fitted_exponent: f64,
    /// Least `C` with `C⁻¹ n^{-1/k} ≤ |x_n| ≤ C n^{-1/k}` over the window.
    pub sandwich_constant: f64,
    /// First index from which `|y_n|` never increases.
    pub y_monotone_from: usize,
}

fn norm(y: &[Complex64]) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl PetalOrbit {
    /// Columns `n,re_x,im_x,|y|,|x|*n^{1/k}`, every `stride`-th step.
    pub fn to_csv(&self, stride: usize) -> String {
        let mut out = String::from("n,re_x,im_x,|y|,|x|*n^{1/k}\n");
        let e = 1.0 / self.k as f64;
        for (n, (x, y)) in self.points.iter().enumerate().step_by(stride.max(1)) {
            let scaled = x.norm() * (n as f64).powf(e);
            writeln!(out, "{n},{:.17e},{:.17e},{:.17e},{:.17e}", x.re, x.im, norm(y), scaled).unwrap();
        }
        out
    }

    pub fn y_norms(&self) -> Vec<f64> {
        self.points.iter().map(|(_, y)| norm(y)).collect()
    }
}

struct PetalShape {
    k: u32,
    leading: Complex64,
    theta: Complex64,
}

fn petal_shape(t: &SemiAttractiveMap) -> Result<PetalShape, HakimError> {
    let res = multiplicity(t)?;
    let n = match res.multiplicity {
        Multiplicity::Finite(n) if n >= 2 => n,
        other => {
            return Err(HakimError::Precondition(format!(
                "petals need finite multiplicity at least 2, got {other:?}"
            )))
        }
    };
    let k = n - 1;
    let mut e = vec![0u8; t.nvars()];
    e[0] = n as u8;
    let leading = res.q.coeff(&e);
    let theta = (-(k as f64) * leading).powf(1.0 / k as f64);
    Ok(PetalShape { k, leading, theta })
}

impl PetalShape {
    fn seed_x(&self, w: Complex64) -> Complex64 {
        w.powf(1.0 / self.k as f64) / self.theta
    }
}

/// The `x` whose normalized coordinate `u = θx` satisfies `u^k = w` on the
/// principal branch. `w = R` is the centre of the petal.
pub fn petal_seed_x(t: &SemiAttractiveMap, w: Complex64) -> Result<Complex64, HakimError> {
    Ok(petal_shape(t)?.seed_x(w))
}

fn inside(shape: &PetalShape, cfg: &PetalConfig, x: Complex64, y: &[Complex64]) -> bool {
    let w = (shape.theta * x).powu(shape.k);
    (w - cfg.radius).norm() < cfg.radius && norm(y) < cfg.rho
}

/// Iterates `T` from `seed`, requiring every point to stay in the petal, and
/// fits the decay of `|x_n|` over the window (the tail half by default).
pub fn iterate_petal(
    t: &SemiAttractiveMap,
    seed: (Complex64, Vec<Complex64>),
    steps: usize,
    config: &PetalConfig,
    window: Option<FitWindow>,
) -> Result<PetalOrbit, HakimError> {
    let shape = petal_shape(t)?;
    if seed.1.len() != t.m() {
        return Err(HakimError::Precondition(format!(
            "seed has {} y-coordinates, map has {}",
            seed.1.len(),
            t.m()
        )));
    }
    let window = window.unwrap_or_else(|| FitWindow::tail_half(steps));
    if window.start < 1 || window.end > steps || window.start >= window.end {
        return Err(HakimError::Precondition(format!("fit window {window:?} invalid for {steps} steps")));
    }
    let escape = |step| HakimError::PetalEscape {
        step,
        radius: config.radius,
        rho: config.rho,
    };
    if !inside(&shape, config, seed.0, &seed.1) {
        return Err(escape(0));
    }
    let mut points = Vec::with_capacity(steps + 1);
    points.push(seed);
    for n in 1..=steps {
        let (x, y) = &points[n - 1];
        let next = t.apply(*x, y);
        if !inside(&shape, config, next.0, &next.1) {
            return Err(escape(n));
        }
        points.push(next);
    }
    let inv_k = 1.0 / shape.k as f64;
    let range = window.start..=window.end;
    let (ln_n, ln_x): (Vec<f64>, Vec<f64>) = range
        .clone()
        .map(|n| ((n as f64).ln(), points[n].0.norm().ln()))
        .unzip();
    let fitted_exponent = least_squares(&ln_n, &ln_x).map_or(f64::NAN, |(s, _)| s);
    let sandwich_constant = range
        .map(|n| {
            let s = points[n].0.norm() * (n as f64).powf(inv_k);
            s.max(1.0 / s)
        })
        .fold(1.0, f64::max);
    let ys: Vec<f64> = points.iter().map(|(_, y)| norm(y)).collect();
    let y_monotone_from = (1..ys.len()).rev().find(|&n| ys[n] > ys[n - 1]).unwrap_or(0);
    Ok(PetalOrbit {
        points,
        k: shape.k,
        leading: shape.leading,
        theta: shape.theta,
        config: *config,
        window,
        fitted_exponent,
        sandwich_constant,
        y_monotone_from,
    })
}

/// Seeds at the centre of the petal (`u^k = R`, `y = 0`) and halves `R` and
/// `ρ` whenever the orbit escapes.
pub fn adaptive_petal(
    t: &SemiAttractiveMap,
    steps: usize,
    config: &PetalConfig,
    window: Option<FitWindow>,
) -> Result<PetalOrbit, HakimError> {
    let shape = petal_shape(t)?;
    let mut cfg = *config;
    let mut last = None;
    for _ in 0..=config.max_halvings {
        let seed = (shape.seed_x(Complex64::new(cfg.radius, 0.0)), vec![Complex64::new(0.0, 0.0); t.m()]);
        match iterate_petal(t, seed, steps, &cfg, window) {
            Ok(orbit) => return Ok(orbit),
            Err(e @ HakimError::PetalEscape { .. }) => {
                last = Some(e);
                cfg.radius *= 0.5;
                cfg.rho *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct FatouCheck {
    /// Entry `n` is `|X_{n+1} - X_n - 1|`.
    pub deviations: Vec<f64>,
    pub from: usize,
    /// Largest deviation for `n ≥ from`.
    pub max_deviation: f64,
    /// Least-squares slope of `ln` deviation against `ln n` over the second
    /// half of `[from, end]`.
    pub decay_exponent: f64,
}

/// Transforms the orbit by `X = 1/(k a x^k)` with `a = -a_{k+1}`, in which the
/// dynamics should approach the translation `X -> X + 1`.
pub fn fatou_coordinate_check(orbit: &PetalOrbit, from: usize) -> Result<FatouCheck, HakimError> {
    let n = orbit.points.len();
    if from + 3 > n {
        return Err(HakimError::Precondition(format!("orbit too short for a check from step {from}")));
    }
    let a = -orbit.leading;
    let k = orbit.k;
    let coord: Vec<Complex64> = orbit
        .points
        .iter()
        .map(|(x, _)| (a * k as f64 * x.powu(k)).inv())
        .collect();
    let deviations: Vec<f64> = coord.windows(2).map(|w| (w[1] - w[0] - 1.0).norm()).collect();
    let max_deviation = deviations[from..].iter().copied().fold(0.0, f64::max);
    let mid = from + (deviations.len() - from) / 2;
    let (ln_n, ln_d): (Vec<f64>, Vec<f64>) = (mid.max(1)..deviations.len())
        .filter(|&i| deviations[i] > 0.0)
        .map(|i| ((i as f64).ln(), deviations[i].ln()))
        .unzip();
    let decay_exponent = least_squares(&ln_n, &ln_d).map_or(f64::NAN, |(s, _)| s);
    Ok(FatouCheck {
        deviations,
        from,
        max_deviation,
        decay_exponent,
    })
}
