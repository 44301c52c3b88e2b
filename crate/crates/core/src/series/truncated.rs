use std::fmt::Write as _;

use num_complex::Complex64;

use super::SeriesError;

/// Default rejection threshold for the composition tail estimate.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-9;

/// Largest geometric ratio assumed by the tail heuristic.
const TAIL_RATIO_CAP: f64 = 0.9;

/// A complex power series `c_0 + c_1 z + ... + c_N z^N` with a reference disk
/// `|z| <= r` on which norms are measured.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncatedSeries {
    coeffs: Vec<Complex64>,
    disk_radius: f64,
}

fn check_radius(r: f64) -> Result<(), SeriesError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(SeriesError::InvalidRadius(r))
    }
}

impl TruncatedSeries {
    pub fn new(coeffs: Vec<Complex64>, disk_radius: f64) -> Result<Self, SeriesError> {
        if coeffs.is_empty() {
            return Err(SeriesError::Empty);
        }
        check_radius(disk_radius)?;
        Ok(Self {
            coeffs,
            disk_radius,
        })
    }

    pub fn from_real(coeffs: &[f64], order: usize, disk_radius: f64) -> Result<Self, SeriesError> {
        let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
        for (dst, &src) in c.iter_mut().zip(coeffs) {
            *dst = Complex64::new(src, 0.0);
        }
        Self::new(c, disk_radius)
    }

    pub fn zero(order: usize, disk_radius: f64) -> Result<Self, SeriesError> {
        Self::new(vec![Complex64::new(0.0, 0.0); order + 1], disk_radius)
    }

    /// `c z^k`, or the zero series when `k > order`.
    pub fn monomial(
        c: Complex64,
        k: usize,
        order: usize,
        disk_radius: f64,
    ) -> Result<Self, SeriesError> {
        let mut s = Self::zero(order, disk_radius)?;
        if k <= order {
            s.coeffs[k] = c;
        }
        Ok(s)
    }

    /// The identity map `z`.
    pub fn identity(order: usize, disk_radius: f64) -> Result<Self, SeriesError> {
        Self::monomial(Complex64::new(1.0, 0.0), 1, order, disk_radius)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `z^k`; zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.coeffs.get(k).copied().unwrap_or_default()
    }

    pub fn disk_radius(&self) -> f64 {
        self.disk_radius
    }

    /// Same coefficients measured on a different reference disk.
    pub fn with_disk_radius(&self, disk_radius: f64) -> Result<Self, SeriesError> {
        check_radius(disk_radius)?;
        Ok(Self {
            coeffs: self.coeffs.clone(),
            disk_radius,
        })
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.resize(order + 1, Complex64::new(0.0, 0.0));
        Self {
            coeffs,
            disk_radius: self.disk_radius,
        }
    }

    pub fn map_coeffs(&self, mut f: impl FnMut(usize, Complex64) -> Complex64) -> Self {
        Self {
            coeffs: self.coeffs.iter().enumerate().map(|(k, &c)| f(k, c)).collect(),
            disk_radius: self.disk_radius,
        }
    }

    pub fn set_coeff(&mut self, k: usize, c: Complex64) {
        if k < self.coeffs.len() {
            self.coeffs[k] = c;
        }
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    /// Value and first derivative at `z`, by a joint Horner recurrence.
    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let zero = Complex64::new(0.0, 0.0);
        let mut p = zero;
        let mut dp = zero;
        for &c in self.coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    fn check_same_disk(&self, other: &Self) -> Result<(), SeriesError> {
        let (a, b) = (self.disk_radius, other.disk_radius);
        if (a - b).abs() <= 1e-12 * a.max(b) {
            Ok(())
        } else {
            Err(SeriesError::DomainMismatch { left: a, right: b })
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_same_disk(other)?;
        let n = self.order().min(other.order());
        Ok(Self {
            coeffs: (0..=n).map(|k| self.coeffs[k] + other.coeffs[k]).collect(),
            disk_radius: self.disk_radius,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_same_disk(other)?;
        let n = self.order().min(other.order());
        Ok(Self {
            coeffs: (0..=n).map(|k| self.coeffs[k] - other.coeffs[k]).collect(),
            disk_radius: self.disk_radius,
        })
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.map_coeffs(|_, c| c * a)
    }

    /// `self + a * other`, truncated to the smaller order.
    pub fn axpy(&self, a: Complex64, other: &Self) -> Result<Self, SeriesError> {
        self.check_same_disk(other)?;
        let n = self.order().min(other.order());
        Ok(Self {
            coeffs: (0..=n).map(|k| self.coeffs[k] + a * other.coeffs[k]).collect(),
            disk_radius: self.disk_radius,
        })
    }

    /// Cauchy product truncated to the smaller order.
    pub fn multiply(&self, other: &Self) -> Result<Self, SeriesError> {
        self.check_same_disk(other)?;
        let n = self.order().min(other.order());
        Ok(Self {
            coeffs: cauchy_product(&self.coeffs, &other.coeffs, n),
            disk_radius: self.disk_radius,
        })
    }

    /// Heuristic size of the discarded tail `sum_{k>N} |c_k| R^k`.
    ///
    /// The last two coefficients give the leading tail term; the ratio between
    /// the last pair and the pair before it (taken per index, so sparse even or
    /// odd series are handled) is used as a geometric decay rate, clamped to
    /// `[0, 0.9]`.
    pub fn tail_estimate(&self, radius: f64) -> f64 {
        let n = self.order();
        let term = |k: usize| self.coeffs[k].norm() * radius.powi(k as i32);
        let pair = |k: usize| {
            if k == 0 {
                term(0)
            } else {
                term(k).max(term(k - 1))
            }
        };
        let last = pair(n);
        if last == 0.0 {
            return 0.0;
        }
        let prev = if n >= 2 { pair(n - 2) } else { 0.0 };
        let rho = if prev > 0.0 {
            (last / prev).sqrt().clamp(0.0, TAIL_RATIO_CAP)
        } else {
            TAIL_RATIO_CAP
        };
        last / (1.0 - rho)
    }

    /// Taylor coefficients of `self ∘ inner` up to the smaller order, with the
    /// default tail threshold.
    pub fn compose(&self, inner: &Self) -> Result<Self, SeriesError> {
        self.compose_with_threshold(inner, DEFAULT_TAIL_THRESHOLD)
    }

    /// Horner-style composition. The result lives on the inner series'
    /// reference disk. Rejected when the outer tail, evaluated at the largest
    /// modulus the inner series can reach on its disk, exceeds `threshold`.
    pub fn compose_with_threshold(&self, inner: &Self, threshold: f64) -> Result<Self, SeriesError> {
        let reach = inner.disk_norm_bound(inner.disk_radius)?;
        let tail = self.tail_estimate(reach);
        if !(tail <= threshold) {
            return Err(SeriesError::CompositionDivergence { tail, threshold });
        }
        let n = self.order().min(inner.order());
        let inner_c = &inner.coeffs[..=n];
        let mut acc = vec![Complex64::new(0.0, 0.0); n + 1];
        for &c in self.coeffs.iter().rev() {
            acc = cauchy_product(&acc, inner_c, n);
            acc[0] += c;
        }
        Ok(Self {
            coeffs: acc,
            disk_radius: inner.disk_radius,
        })
    }

    /// Termwise derivative; the truncation order drops by one (a constant
    /// series stays order zero).
    pub fn derivative(&self) -> Self {
        let n = self.order();
        let coeffs = if n == 0 {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            (1..=n).map(|k| self.coeffs[k] * k as f64).collect()
        };
        Self {
            coeffs,
            disk_radius: self.disk_radius,
        }
    }

    /// `z -> s(b z)`, keeping the reference disk.
    pub fn scale_argument(&self, b: Complex64) -> Self {
        let mut p = Complex64::new(1.0, 0.0);
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let out = c * p;
                p *= b;
                out
            })
            .collect();
        Self {
            coeffs,
            disk_radius: self.disk_radius,
        }
    }

    /// `z -> a^{-1} s(a z)`: coefficients `c_k a^{k-1}`, reference disk
    /// `r / |a|`.
    pub fn affine_conjugate(&self, a: Complex64) -> Result<Self, SeriesError> {
        if a == Complex64::new(0.0, 0.0) || !a.is_finite() {
            return Err(SeriesError::DegenerateScale);
        }
        let inv = a.inv();
        let mut p = inv;
        let coeffs = self
            .coeffs
            .iter()
            .map(|&c| {
                let out = c * p;
                p *= a;
                out
            })
            .collect();
        Ok(Self {
            coeffs,
            disk_radius: self.disk_radius / a.norm(),
        })
    }

    /// `sum |c_k| r^k`, an upper bound for the sup norm on `|z| <= r`.
    pub fn disk_norm_bound(&self, r: f64) -> Result<f64, SeriesError> {
        if !(r >= 0.0) || r > self.disk_radius * (1.0 + 1e-12) {
            return Err(SeriesError::RadiusOutsideDisk {
                radius: r,
                disk: self.disk_radius,
            });
        }
        let mut p = 1.0;
        let mut sum = 0.0;
        for c in &self.coeffs {
            sum += c.norm() * p;
            p *= r;
        }
        Ok(sum)
    }

    /// Largest coefficient modulus.
    pub fn max_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Text form: a line `N r` followed by `N+1` lines `re im`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "{} {:.17e}", self.order(), self.disk_radius).unwrap();
        for c in &self.coeffs {
            writeln!(out, "{:.17e} {:.17e}", c.re, c.im).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, SeriesError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (no, header) = lines.next().ok_or(SeriesError::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let (order, radius) = parse_header(header, no + 1)?;
        let mut coeffs = Vec::with_capacity(order + 1);
        for (no, line) in lines.by_ref().take(order + 1) {
            let v = parse_floats(line, no + 1)?;
            if v.len() != 2 {
                return Err(SeriesError::Parse {
                    line: no + 1,
                    message: format!("expected `re im`, got {} fields", v.len()),
                });
            }
            coeffs.push(Complex64::new(v[0], v[1]));
        }
        if coeffs.len() != order + 1 {
            return Err(SeriesError::Parse {
                line: 0,
                message: format!("expected {} coefficient lines, got {}", order + 1, coeffs.len()),
            });
        }
        if let Some((no, _)) = lines.next() {
            return Err(SeriesError::Parse {
                line: no + 1,
                message: "trailing data".into(),
            });
        }
        Self::new(coeffs, radius)
    }
}

fn parse_header(line: &str, no: usize) -> Result<(usize, f64), SeriesError> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let err = |m: &str| SeriesError::Parse {
        line: no,
        message: m.to_string(),
    };
    if parts.len() != 2 {
        return Err(err("expected `N r`"));
    }
    let order = parts[0].parse().map_err(|_| err("bad truncation order"))?;
    let radius = parts[1].parse().map_err(|_| err("bad radius"))?;
    Ok((order, radius))
}

pub(crate) fn parse_floats(line: &str, no: usize) -> Result<Vec<f64>, SeriesError> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| SeriesError::Parse {
                line: no,
                message: format!("bad number `{t}`"),
            })
        })
        .collect()
}

fn cauchy_product(a: &[Complex64], b: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
    for (i, &ai) in a.iter().enumerate().take(n + 1) {
        if ai == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(n + 1 - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}
