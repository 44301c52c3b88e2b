use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::truncated::parse_floats;
use super::SeriesError;

/// Largest supported number of variables (one `x` plus up to three `y`s).
pub const MAX_VARS: usize = 4;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Exponent tuple `(e_0, ..., e_{MAX_VARS-1})`; unused slots are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Monomial {
    exps: [u8; MAX_VARS],
}

impl Monomial {
    pub fn new(exps: &[u8]) -> Self {
        let mut e = [0u8; MAX_VARS];
        e[..exps.len()].copy_from_slice(exps);
        Self { exps: e }
    }

    pub fn exp(&self, var: usize) -> u8 {
        self.exps[var]
    }

    pub fn exps(&self) -> &[u8; MAX_VARS] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut e = self.exps;
        for (a, b) in e.iter_mut().zip(other.exps) {
            *a += b;
        }
        Self { exps: e }
    }

    fn with_exp(&self, var: usize, value: u8) -> Self {
        let mut e = self.exps;
        e[var] = value;
        Self { exps: e }
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.exps.cmp(&other.exps))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A polynomial in `nvars` complex variables, truncated at total degree
/// `cap`. Terms are kept sorted by (degree, exponents) and zero coefficients
/// are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiPoly {
    nvars: usize,
    cap: u32,
    terms: Vec<(Monomial, Complex64)>,
}

struct Accumulator {
    vals: Vec<Complex64>,
    used: Vec<bool>,
    touched: Vec<(usize, Monomial)>,
}

thread_local! {
    static SCRATCH: RefCell<Accumulator> = const {
        RefCell::new(Accumulator { vals: Vec::new(), used: Vec::new(), touched: Vec::new() })
    };
}

fn slot(m: &Monomial, nvars: usize, cap: u32) -> usize {
    let base = cap as usize + 1;
    m.exps[..nvars]
        .iter()
        .rev()
        .fold(0usize, |acc, &e| acc * base + e as usize)
}

/// Accumulates products into a dense scratch buffer and returns the sorted,
/// zero-free term list.
fn accumulate(
    nvars: usize,
    cap: u32,
    fill: impl FnOnce(&mut dyn FnMut(Monomial, Complex64)),
) -> Vec<(Monomial, Complex64)> {
    SCRATCH.with(|cell| {
        let mut acc = cell.borrow_mut();
        let size = (cap as usize + 1).pow(nvars as u32);
        if acc.vals.len() < size {
            acc.vals.resize(size, ZERO);
            acc.used.resize(size, false);
        }
        {
            let acc = &mut *acc;
            let mut push = |m: Monomial, c: Complex64| {
                let s = slot(&m, nvars, cap);
                if !acc.used[s] {
                    acc.used[s] = true;
                    acc.touched.push((s, m));
                }
                acc.vals[s] += c;
            };
            fill(&mut push);
        }
        let acc = &mut *acc;
        let mut terms = Vec::with_capacity(acc.touched.len());
        for &(s, m) in &acc.touched {
            let v = acc.vals[s];
            if v != ZERO {
                terms.push((m, v));
            }
            acc.vals[s] = ZERO;
            acc.used[s] = false;
        }
        acc.touched.clear();
        terms.sort_unstable_by_key(|a| a.0);
        terms
    })
}

impl MultiPoly {
    pub fn zero(nvars: usize, cap: u32) -> Result<Self, SeriesError> {
        if nvars == 0 || nvars > MAX_VARS {
            return Err(SeriesError::TooManyVariables(nvars));
        }
        Ok(Self {
            nvars,
            cap,
            terms: Vec::new(),
        })
    }

    pub fn constant(nvars: usize, cap: u32, c: Complex64) -> Result<Self, SeriesError> {
        let mut p = Self::zero(nvars, cap)?;
        if c != ZERO {
            p.terms.push((Monomial::default(), c));
        }
        Ok(p)
    }

    /// The coordinate function of variable `var`.
    pub fn variable(nvars: usize, cap: u32, var: usize) -> Result<Self, SeriesError> {
        let mut e = [0u8; MAX_VARS];
        e[var] = 1;
        Self::monomial(nvars, cap, &e[..nvars], ONE)
    }

    pub fn monomial(nvars: usize, cap: u32, exps: &[u8], c: Complex64) -> Result<Self, SeriesError> {
        Self::from_terms(nvars, cap, [(exps.to_vec(), c)])
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs. Duplicates
    /// are summed; terms above the degree cap are dropped.
    pub fn from_terms<I, E>(nvars: usize, cap: u32, terms: I) -> Result<Self, SeriesError>
    where
        I: IntoIterator<Item = (E, Complex64)>,
        E: AsRef<[u8]>,
    {
        let mut p = Self::zero(nvars, cap)?;
        let mut items = Vec::new();
        for (e, c) in terms {
            let e = e.as_ref();
            if e.len() != nvars {
                return Err(SeriesError::VariableMismatch {
                    left: nvars,
                    right: e.len(),
                });
            }
            let m = Monomial::new(e);
            if m.degree() <= cap {
                items.push((m, c));
            }
        }
        p.terms = accumulate(nvars, cap, |push| {
            for (m, c) in items {
                push(m, c);
            }
        });
        Ok(p)
    }

    fn same_space(&self, terms: Vec<(Monomial, Complex64)>) -> Self {
        Self {
            nvars: self.nvars,
            cap: self.cap,
            terms,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn degree_cap(&self) -> u32 {
        self.cap
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Complex64)> + '_ {
        self.terms.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exps: &[u8]) -> Complex64 {
        let m = Monomial::new(exps);
        self.terms
            .binary_search_by(|(k, _)| k.cmp(&m))
            .map(|i| self.terms[i].1)
            .unwrap_or(ZERO)
    }

    pub fn constant_term(&self) -> Complex64 {
        match self.terms.first() {
            Some((m, c)) if m.degree() == 0 => *c,
            _ => ZERO,
        }
    }

    /// Largest coefficient modulus (`0` for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Smallest total degree carrying a coefficient above `tol`.
    pub fn order(&self, tol: f64) -> Option<u32> {
        self.terms
            .iter()
            .find(|(_, c)| c.norm() > tol)
            .map(|(m, _)| m.degree())
    }

    fn check_space(&self, other: &Self) -> Result<(), SeriesError> {
        if self.nvars != other.nvars {
            return Err(SeriesError::VariableMismatch {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    fn combine(&self, other: &Self, b: Complex64) -> Result<Self, SeriesError> {
        self.check_space(other)?;
        let cap = self.cap.min(other.cap);
        let terms = accumulate(self.nvars, cap, |push| {
            for &(m, c) in self.terms.iter().take_while(|(m, _)| m.degree() <= cap) {
                push(m, c);
            }
            for &(m, c) in other.terms.iter().take_while(|(m, _)| m.degree() <= cap) {
                push(m, b * c);
            }
        });
        Ok(Self {
            nvars: self.nvars,
            cap,
            terms,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.combine(other, ONE)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.combine(other, -ONE)
    }

    /// `self + b * other`.
    pub fn axpy(&self, b: Complex64, other: &Self) -> Result<Self, SeriesError> {
        self.combine(other, b)
    }

    pub fn scale(&self, a: Complex64) -> Self {
        if a == ZERO {
            return self.same_space(Vec::new());
        }
        self.same_space(self.terms.iter().map(|&(m, c)| (m, a * c)).collect())
    }

    /// Product truncated at the smaller degree cap.
    pub fn mul(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_space(other)?;
        let cap = self.cap.min(other.cap);
        let terms = accumulate(self.nvars, cap, |push| {
            for &(ma, ca) in &self.terms {
                let da = ma.degree();
                if da > cap {
                    break;
                }
                for &(mb, cb) in &other.terms {
                    if da + mb.degree() > cap {
                        break;
                    }
                    push(ma.mul(&mb), ca * cb);
                }
            }
        });
        Ok(Self {
            nvars: self.nvars,
            cap,
            terms,
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.nvars, self.cap, ONE).expect("valid space");
        for _ in 0..k {
            out = out.mul(self).expect("same space");
        }
        out
    }

    /// Substitutes `subs[i]` for variable `i`. All substituted polynomials must
    /// share one variable space; the result is truncated at their degree cap.
    /// Monomial values are memoised so each one costs a single product.
    pub fn compose(&self, subs: &[MultiPoly]) -> Result<Self, SeriesError> {
        if subs.len() != self.nvars {
            return Err(SeriesError::VariableMismatch {
                left: self.nvars,
                right: subs.len(),
            });
        }
        let target = &subs[0];
        for s in subs {
            target.check_space(s)?;
        }
        let cap = subs.iter().map(|s| s.cap).min().unwrap_or(target.cap);
        let one = Self::constant(target.nvars, cap, ONE)?;
        let mut memo: HashMap<Monomial, Self> = HashMap::new();
        memo.insert(Monomial::default(), one);

        fn value<'a>(
            m: Monomial,
            subs: &[MultiPoly],
            memo: &'a mut HashMap<Monomial, MultiPoly>,
        ) -> &'a MultiPoly {
            if !memo.contains_key(&m) {
                let var = (0..MAX_VARS).rev().find(|&i| m.exps[i] > 0).unwrap();
                let prev = m.with_exp(var, m.exps[var] - 1);
                let v = value(prev, subs, memo).mul(&subs[var]).expect("same space");
                memo.insert(m, v);
            }
            &memo[&m]
        }

        let nv = target.nvars;
        let mut out = Vec::new();
        for &(m, c) in &self.terms {
            let v = value(m, subs, &mut memo);
            out.push((c, v.terms.clone()));
        }
        let terms = accumulate(nv, cap, |push| {
            for (c, ts) in out {
                for (mm, cc) in ts {
                    push(mm, c * cc);
                }
            }
        });
        Ok(Self {
            nvars: nv,
            cap,
            terms,
        })
    }

    pub fn eval(&self, point: &[Complex64]) -> Complex64 {
        let mut powers: Vec<Vec<Complex64>> = Vec::with_capacity(self.nvars);
        let top = self.terms.last().map_or(0, |(m, _)| m.degree()) as usize;
        for &z in point.iter().take(self.nvars) {
            let mut row = Vec::with_capacity(top + 1);
            let mut p = ONE;
            for _ in 0..=top {
                row.push(p);
                p *= z;
            }
            powers.push(row);
        }
        self.terms
            .iter()
            .map(|(m, c)| {
                (0..self.nvars).fold(*c, |acc, i| acc * powers[i][m.exps[i] as usize])
            })
            .sum()
    }

    pub fn partial_derivative(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(m, _)| m.exps[var] > 0)
            .map(|&(m, c)| (m.with_exp(var, m.exps[var] - 1), c * m.exps[var] as f64))
            .collect::<Vec<_>>();
        let mut terms = terms;
        terms.sort_unstable_by_key(|a| a.0);
        self.same_space(terms)
    }

    /// Coefficient of `x_var^k` as a polynomial in the remaining variables
    /// (kept in the same variable space with exponent zero in `var`).
    pub fn coefficient_of(&self, var: usize, k: u8) -> Self {
        let mut terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(m, _)| m.exps[var] == k)
            .map(|&(m, c)| (m.with_exp(var, 0), c))
            .collect();
        terms.sort_unstable_by_key(|a| a.0);
        self.same_space(terms)
    }

    /// Drops the terms free of `x_var` and divides the rest by `x_var`.
    pub fn divide_by_variable(&self, var: usize) -> Self {
        let mut terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(m, _)| m.exps[var] > 0)
            .map(|&(m, c)| (m.with_exp(var, m.exps[var] - 1), c))
            .collect();
        terms.sort_unstable_by_key(|a| a.0);
        self.same_space(terms)
    }

    /// Multiplies by `x_var^k`, dropping what exceeds the degree cap.
    pub fn shift(&self, var: usize, k: u8) -> Self {
        let mut terms: Vec<_> = self
            .terms
            .iter()
            .filter(|(m, _)| m.degree() + k as u32 <= self.cap)
            .map(|&(m, c)| (m.with_exp(var, m.exps[var] + k), c))
            .collect();
        terms.sort_unstable_by_key(|a| a.0);
        self.same_space(terms)
    }

    /// Terms of total degree exactly `d`.
    pub fn homogeneous_part(&self, d: u32) -> Self {
        self.filter(|m| m.degree() == d)
    }

    pub fn truncate_degree(&self, d: u32) -> Self {
        self.filter(|m| m.degree() <= d)
    }

    pub fn filter(&self, mut keep: impl FnMut(&Monomial) -> bool) -> Self {
        self.same_space(self.terms.iter().copied().filter(|(m, _)| keep(m)).collect())
    }

    pub fn depends_on(&self, var: usize) -> bool {
        self.terms.iter().any(|(m, _)| m.exps[var] > 0)
    }

    /// Lines `e_0 e_1 ... e_m re im`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            for e in &m.exps[..self.nvars] {
                write!(out, "{e} ").unwrap();
            }
            writeln!(out, "{:.17e} {:.17e}", c.re, c.im).unwrap();
        }
        out
    }

    pub fn from_text(text: &str, nvars: usize, cap: u32) -> Result<Self, SeriesError> {
        let mut items = Vec::new();
        for (no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != nvars + 2 {
                return Err(SeriesError::Parse {
                    line: no + 1,
                    message: format!("expected {} fields, got {}", nvars + 2, fields.len()),
                });
            }
            let exps = fields[..nvars]
                .iter()
                .map(|t| {
                    t.parse::<u8>().map_err(|_| SeriesError::Parse {
                        line: no + 1,
                        message: format!("bad exponent `{t}`"),
                    })
                })
                .collect::<Result<Vec<u8>, _>>()?;
            let v = parse_floats(&fields[nvars..].join(" "), no + 1)?;
            let m = Monomial::new(&exps);
            if m.degree() > cap {
                return Err(SeriesError::Parse {
                    line: no + 1,
                    message: format!("degree {} exceeds cap {cap}", m.degree()),
                });
            }
            items.push((exps, Complex64::new(v[0], v[1])));
        }
        Self::from_terms(nvars, cap, items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn canonical_form_drops_zeros_and_merges() {
        let p = MultiPoly::from_terms(
            2,
            4,
            [(vec![1, 0], c(1.0)), (vec![1, 0], c(-1.0)), (vec![0, 2], c(3.0))],
        )
        .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.coeff(&[0, 2]), c(3.0));
    }

    #[test]
    fn product_truncates_at_cap() {
        let x = MultiPoly::variable(2, 3, 0).unwrap();
        let y = MultiPoly::variable(2, 3, 1).unwrap();
        let s = x.add(&y).unwrap();
        let cube = s.pow(3);
        assert_eq!(cube.coeff(&[2, 1]), c(3.0));
        assert!(s.pow(4).is_zero());
    }

    #[test]
    fn compose_substitutes_variables() {
        // p(x, y) = x^2 y + 2, with x -> x + y, y -> 3y.
        let p = MultiPoly::from_terms(2, 6, [(vec![2, 1], c(1.0)), (vec![0, 0], c(2.0))]).unwrap();
        let x = MultiPoly::variable(2, 6, 0).unwrap();
        let y = MultiPoly::variable(2, 6, 1).unwrap();
        let q = p.compose(&[x.add(&y).unwrap(), y.scale(c(3.0))]).unwrap();
        let pt = [Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.4)];
        let direct = p.eval(&[pt[0] + pt[1], pt[1] * 3.0]);
        assert!((q.eval(&pt) - direct).norm() < 1e-14);
    }

    #[test]
    fn coefficient_extraction_and_shift() {
        let p = MultiPoly::from_terms(
            2,
            5,
            [(vec![2, 1], c(2.0)), (vec![2, 0], c(1.0)), (vec![1, 1], c(5.0))],
        )
        .unwrap();
        let a2 = p.coefficient_of(0, 2);
        assert_eq!(a2.coeff(&[0, 1]), c(2.0));
        assert_eq!(a2.coeff(&[0, 0]), c(1.0));
        assert_eq!(a2.shift(0, 2), p.filter(|m| m.exp(0) == 2));
        let lowered = p.divide_by_variable(1);
        assert_eq!(lowered.len(), 2);
        assert_eq!(lowered.coeff(&[1, 0]), c(5.0));
    }

    #[test]
    fn text_round_trip_and_errors() {
        let p = MultiPoly::from_terms(
            3,
            6,
            [(vec![1, 0, 2], Complex64::new(0.5, -1.0)), (vec![0, 0, 0], c(2.0))],
        )
        .unwrap();
        assert_eq!(MultiPoly::from_text(&p.to_text(), 3, 6).unwrap(), p);
        assert!(MultiPoly::from_text("1 2 0.0\n", 2, 6).is_err());
        assert!(MultiPoly::from_text("7 0 1.0 0.0\n", 2, 6).is_err());
    }

    #[test]
    fn rejects_too_many_variables() {
        assert!(MultiPoly::zero(MAX_VARS + 1, 4).is_err());
    }
}
