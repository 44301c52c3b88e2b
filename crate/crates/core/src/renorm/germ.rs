use num_complex::Complex64;

use super::RenormError;
use crate::series::{SeriesError, TruncatedSeries};

/// Largest odd coefficient tolerated in an even germ.
pub(crate) const PARITY_TOL: f64 = 1e-12;
/// Largest tolerated `|f(1) - 1|`.
pub(crate) const VALUE_TOL: f64 = 1e-10;

/// An even series with `f(1) = 1`: critical point at the origin and the
/// selected fixed point at one.
#[derive(Clone, Debug, PartialEq)]
pub struct Germ {
    series: TruncatedSeries,
}

impl Germ {
    pub fn new(series: TruncatedSeries) -> Result<Self, RenormError> {
        if let Some(k) = (1..=series.order())
            .step_by(2)
            .find(|&k| series.coeff(k).norm() > PARITY_TOL)
        {
            return Err(RenormError::InvalidGerm(format!(
                "odd coefficient c_{k} = {:e}",
                series.coeff(k).norm()
            )));
        }
        let dev = (series.eval(Complex64::new(1.0, 0.0)) - 1.0).norm();
        if dev > VALUE_TOL {
            return Err(RenormError::InvalidGerm(format!("|f(1) - 1| = {dev:e}")));
        }
        Ok(Self { series })
    }

    /// The germ with free coordinates `c_2, c_4, ...` and `c_0 = 1 - Σ c_{2j}`.
    pub fn from_free(coords: &[Complex64], order: usize, disk_radius: f64) -> Result<Self, RenormError> {
        let mut s = TruncatedSeries::zero(order, disk_radius)?;
        let mut c0 = Complex64::new(1.0, 0.0);
        for (j, &c) in coords.iter().enumerate().take(order / 2) {
            s.set_coeff(2 * (j + 1), c);
            c0 -= c;
        }
        s.set_coeff(0, c0);
        Ok(Self { series: s })
    }

    /// `z^2 + c` moved to germ form: `b z^2 + c/b` with `b` the root of
    /// `b^2 - b + c = 0` of larger real part, so that `1` is the outer fixed
    /// point.
    pub fn normalized_quadratic(c: f64, order: usize, disk_radius: f64) -> Result<Self, RenormError> {
        if order < 2 {
            return Err(RenormError::InvalidGerm("order must be at least 2".into()));
        }
        let b = (1.0 + Complex64::new(1.0 - 4.0 * c, 0.0).sqrt()) / 2.0;
        let mut s = TruncatedSeries::zero(order, disk_radius)?;
        s.set_coeff(0, c / b);
        s.set_coeff(2, b);
        Self::new(s)
    }

    /// Even series with an arbitrary set of coefficients, with `c_0` adjusted so
    /// that `f(1) = 1`.
    pub fn renormalized_value(series: &TruncatedSeries) -> Result<Self, RenormError> {
        let mut s = series.clone();
        let dev = s.eval(Complex64::new(1.0, 0.0)) - 1.0;
        s.set_coeff(0, s.coeff(0) - dev);
        Self::new(s)
    }

    pub fn series(&self) -> &TruncatedSeries {
        &self.series
    }

    pub fn into_series(self) -> TruncatedSeries {
        self.series
    }

    pub fn order(&self) -> usize {
        self.series.order()
    }

    pub fn disk_radius(&self) -> f64 {
        self.series.disk_radius()
    }

    /// Number of free even coordinates.
    pub fn dimension(&self) -> usize {
        self.order() / 2
    }

    pub fn free_coords(&self) -> Vec<Complex64> {
        (1..=self.dimension()).map(|j| self.series.coeff(2 * j)).collect()
    }

    /// Truncates or zero-pads to another order.
    pub fn with_order(&self, order: usize) -> Result<Self, RenormError> {
        Self::renormalized_value(&self.series.truncate(order))
    }

    /// Header `germ even N r` followed by the series text.
    pub fn to_text(&self) -> String {
        format!(
            "germ even {} {:.17e}\n{}",
            self.order(),
            self.disk_radius(),
            self.series.to_text()
        )
    }

    pub fn from_text(text: &str) -> Result<Self, RenormError> {
        let (head, body) = text.split_once('\n').unwrap_or((text, ""));
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "germ" || fields[1] != "even" {
            return Err(SeriesError::Parse {
                line: 1,
                message: "expected header `germ even N r`".into(),
            }
            .into());
        }
        let series = TruncatedSeries::from_text(body)?;
        if fields[2].parse::<usize>().ok() != Some(series.order()) {
            return Err(SeriesError::Parse {
                line: 1,
                message: "header order disagrees with the series body".into(),
            }
            .into());
        }
        Self::new(series)
    }
}
