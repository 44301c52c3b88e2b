//! Superstable parameters of `z^2 + c` and the scaling ratios of the
//! period-doubling cascade, computed by brute-force iteration of the critical
//! orbit.

use std::fmt::Write as _;

use thiserror::Error;
use twofloat::TwoFloat;

/// Largest period exponent resolvable in double precision.
pub const MAX_PERIOD_EXPONENT: usize = 12;
/// Fewest parameters accepted by the extrapolations.
pub const MIN_ENTRIES: usize = 5;
const DD_NEWTON_STEPS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CascadeError {
    #[error("period exponent {0} outside 0..={MAX_PERIOD_EXPONENT}")]
    InvalidOrder(usize),
    #[error("root for period 2^{n} not bracketed by [{lo}, {hi}]")]
    NotBracketed { n: usize, lo: f64, hi: f64 },
    #[error("need at least {need} entries, got {got}")]
    TooFewEntries { need: usize, got: usize },
}

/// Bracket placement relative to the predicted root, in units of the
/// predicted gap `(c_{n-2} - c_{n-1}) / δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BracketConfig {
    pub far: f64,
    pub near: f64,
    /// Ratio assumed before two gaps are known.
    pub initial_ratio: f64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            far: 1.5,
            near: 0.5,
            initial_ratio: 4.0,
        }
    }
}

/// `(q_c^{2^n}(0), d/dc q_c^{2^n}(0))` by direct iteration.
pub fn critical_orbit(c: f64, n: usize) -> (f64, f64) {
    iterate_critical(c, 1usize << n)
}

fn iterate_critical(c: f64, steps: usize) -> (f64, f64) {
    let (mut z, mut dz) = (0.0f64, 0.0f64);
    for _ in 0..steps {
        dz = 2.0 * z * dz + 1.0;
        z = z * z + c;
    }
    (z, dz)
}

fn iterate_critical_dd(c: TwoFloat, steps: usize) -> (TwoFloat, TwoFloat) {
    let (mut z, mut dz) = (TwoFloat::from(0.0), TwoFloat::from(0.0));
    for _ in 0..steps {
        dz = z * dz * 2.0 + 1.0;
        z = z * z + c;
    }
    (z, dz)
}

/// Bisection to a small fraction of `width`, then Newton in double-double so
/// that the stored root does not depend on where the bracket was placed.
fn refine_root(n: usize, mut lo: f64, mut hi: f64, width: f64) -> Result<TwoFloat, CascadeError> {
    let value = |c: f64| critical_orbit(c, n).0;
    let mut plo = value(lo);
    let phi = value(hi);
    if !(plo * phi < 0.0) {
        return Err(CascadeError::NotBracketed { n, lo, hi });
    }
    for _ in 0..200 {
        if hi - lo < 1e-6 * width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pm = value(mid);
        if pm * plo > 0.0 {
            lo = mid;
            plo = pm;
        } else {
            hi = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..50 {
        let (z, dz) = critical_orbit(c, n);
        let next = c - z / dz;
        if next == c || !next.is_finite() {
            break;
        }
        c = next;
    }
    let mut root = TwoFloat::from(c);
    for _ in 0..DD_NEWTON_STEPS {
        let (z, dz) = iterate_critical_dd(root, 1usize << n);
        root -= z / dz;
    }
    Ok(root)
}

fn superstable_roots(k: usize, bracket: &BracketConfig) -> Result<Vec<TwoFloat>, CascadeError> {
    if k > MAX_PERIOD_EXPONENT {
        return Err(CascadeError::InvalidOrder(k));
    }
    let mut cs = vec![TwoFloat::from(0.0), TwoFloat::from(-1.0)];
    let mut ratio = bracket.initial_ratio;
    for n in 2..=k {
        let prev = f64::from(cs[n - 1]);
        let gap = f64::from(cs[n - 2] - cs[n - 1]);
        let lo = prev - bracket.far * gap / ratio;
        let hi = prev - bracket.near * gap / ratio;
        let c = refine_root(n, lo, hi, gap)?;
        cs.push(c);
        ratio = gap / f64::from(cs[n - 1] - c);
    }
    cs.truncate(k + 1);
    Ok(cs)
}

/// `c_0, ..., c_k`: for each `n` the root of `q_c^{2^n}(0) = 0` next below
/// `c_{n-1}`, isolated in a bracket predicted from the running ratio.
pub fn superstable_parameters(k: usize, bracket: &BracketConfig) -> Result<Vec<f64>, CascadeError> {
    Ok(superstable_roots(k, bracket)?.into_iter().map(f64::from).collect())
}

pub fn superstable_parameter(n: usize) -> Result<f64, CascadeError> {
    Ok(*superstable_parameters(n, &BracketConfig::default())?.last().unwrap())
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeTable {
    /// `c_0..c_K`.
    pub superstable_params: Vec<f64>,
    /// `|q_{c_n}^{2^n}(0)|` per parameter.
    pub residuals: Vec<f64>,
    /// Entry `n - 2` is `(c_{n-2} - c_{n-1}) / (c_{n-1} - c_n)`, `n = 2..=K`.
    pub delta_ratios: Vec<f64>,
    /// Entry `n - 1` is `d_n = q_{c_n}^{2^{n-1}}(0)`, `n = 1..=K`.
    pub closest_returns: Vec<f64>,
    /// Entry `n - 1` is `d_n / d_{n+1}`.
    pub alpha_ratios: Vec<f64>,
}

impl CascadeTable {
    /// Gaps, closest returns and residuals are evaluated in double-double at
    /// the unrounded roots; only the stored parameters are rounded.
    pub fn compute(k: usize, bracket: &BracketConfig) -> Result<Self, CascadeError> {
        let roots = superstable_roots(k, bracket)?;
        let returns = roots
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &c)| f64::from(iterate_critical_dd(c, 1usize << (n - 1)).0))
            .collect();
        let params = roots.iter().map(|&c| f64::from(c)).collect();
        let mut table = Self::from_parameters(params, returns);
        table.delta_ratios = roots
            .windows(3)
            .map(|w| f64::from((w[0] - w[1]) / (w[1] - w[2])))
            .collect();
        table.residuals = roots
            .iter()
            .enumerate()
            .map(|(n, &c)| f64::from(iterate_critical_dd(c, 1usize << n).0).abs())
            .collect();
        Ok(table)
    }

    /// Table from given parameters and closest returns (`d_1, d_2, ...`), with
    /// ratios derived and residuals left empty.
    pub fn from_parameters(params: Vec<f64>, returns: Vec<f64>) -> Self {
        let delta_ratios = params
            .windows(3)
            .map(|w| (w[0] - w[1]) / (w[1] - w[2]))
            .collect();
        let alpha_ratios = returns.windows(2).map(|w| w[0] / w[1]).collect();
        Self {
            superstable_params: params,
            residuals: Vec::new(),
            delta_ratios,
            closest_returns: returns,
            alpha_ratios,
        }
    }

    pub fn len(&self) -> usize {
        self.superstable_params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.superstable_params.is_empty()
    }

    /// Columns `n,c_n,delta_ratio,d_n,alpha_ratio`; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,c_n,delta_ratio,d_n,alpha_ratio\n");
        let cell = |v: Option<&f64>| v.map_or(String::new(), |x| format!("{x:.17e}"));
        for (n, c) in self.superstable_params.iter().enumerate() {
            let ratio = n.checked_sub(2).and_then(|i| self.delta_ratios.get(i));
            let d = n.checked_sub(1).and_then(|i| self.closest_returns.get(i));
            let a = n.checked_sub(1).and_then(|i| self.alpha_ratios.get(i));
            writeln!(out, "{n},{c:.17e},{},{},{}", cell(ratio), cell(d), cell(a)).unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub raw_last: f64,
    /// Set when the tail of the sequence was not monotone and the raw last
    /// value was returned instead of the extrapolation.
    pub warning: bool,
}

/// Aitken's Δ² on the last three terms; a non-monotone tail returns the last
/// term with the warning flag.
pub fn aitken_tail(seq: &[f64]) -> Estimate {
    let n = seq.len();
    let raw_last = seq[n - 1];
    if n < 3 {
        return Estimate {
            value: raw_last,
            raw_last,
            warning: true,
        };
    }
    let (x0, x1, x2) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let (d1, d2) = (x1 - x0, x2 - x1);
    if d2.abs() <= 8.0 * f64::EPSILON * x2.abs() {
        return Estimate {
            value: x2,
            raw_last,
            warning: false,
        };
    }
    if d1 * d2 < 0.0 || d2.abs() > d1.abs() {
        return Estimate {
            value: raw_last,
            raw_last,
            warning: true,
        };
    }
    let second = d2 - d1;
    let value = if second == 0.0 { x2 } else { x2 - d2 * d2 / second };
    Estimate {
        value,
        raw_last,
        warning: false,
    }
}

fn require_entries(table: &CascadeTable) -> Result<(), CascadeError> {
    if table.len() < MIN_ENTRIES {
        return Err(CascadeError::TooFewEntries {
            need: MIN_ENTRIES,
            got: table.len(),
        });
    }
    Ok(())
}

/// Extrapolated limit of the parameter-gap ratios.
pub fn delta_estimate(table: &CascadeTable) -> Result<Estimate, CascadeError> {
    require_entries(table)?;
    Ok(aitken_tail(&table.delta_ratios))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaEstimate {
    /// Extrapolated `|d_n / d_{n+1}|`.
    pub value: f64,
    pub raw_last: f64,
    pub warning: bool,
    /// Whether consecutive closest returns alternate in sign.
    pub alternating: bool,
}

/// Extrapolated modulus of the closest-return ratios.
pub fn alpha_estimate(table: &CascadeTable) -> Result<AlphaEstimate, CascadeError> {
    require_entries(table)?;
    if table.alpha_ratios.is_empty() {
        return Err(CascadeError::TooFewEntries { need: 2, got: 0 });
    }
    let moduli: Vec<f64> = table.alpha_ratios.iter().map(|r| r.abs()).collect();
    let e = aitken_tail(&moduli);
    Ok(AlphaEstimate {
        value: e.value,
        raw_last: e.raw_last,
        warning: e.warning,
        alternating: table.alpha_ratios.iter().all(|r| *r < 0.0),
    })
}

/// `c_K - (c_{K-1} - c_K) / (δ - 1)`, the geometric extrapolation of the
/// cascade.
pub fn accumulation_point(table: &CascadeTable, delta: f64) -> f64 {
    let p = &table.superstable_params;
    let (a, b) = (p[p.len() - 2], p[p.len() - 1]);
    b - (a - b) / (delta - 1.0)
}
