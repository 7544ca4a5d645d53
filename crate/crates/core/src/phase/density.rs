use crate::error::{QdsError, Result};

pub const DEFAULT_CELLS: usize = 4096;

/// Relative slack allowed when checking a log-Lipschitz certificate on the grid.
const GRID_TOLERANCE: f64 = 1e-6;

/// Jump point `z` and log-Lipschitz constant `L` of a density in `D_L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlCertificate {
    pub jump_point: f64,
    pub log_lip: f64,
}

/// A probability density sampled at the midpoints of `M` uniform cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Density {
    values: Vec<f64>,
    certificate: Option<DlCertificate>,
}

impl Density {
    /// Normalizes `values` to unit midpoint integral.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(QdsError::InvalidDensity("need at least two cells".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(QdsError::InvalidDensity("values must be finite and nonnegative".into()));
        }
        let mass = grid_integral(&values);
        if !(mass > 0.0) {
            return Err(QdsError::InvalidDensity("zero total mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Ok(Self {
            values,
            certificate: None,
        })
    }

    pub fn uniform(cells: usize) -> Self {
        Self::from_values(vec![1.0; cells.max(2)]).expect("uniform density")
    }

    /// Samples `f` at the cell midpoints, then normalizes.
    pub fn from_fn(cells: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = 1.0 / cells as f64;
        Self::from_values((0..cells).map(|i| f((i as f64 + 0.5) * h)).collect())
    }

    /// Attaches a `D_L` certificate after checking it on the grid.
    pub fn certify(mut self, jump_point: f64, log_lip: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&jump_point) || !(log_lip >= 0.0) {
            return Err(QdsError::CertificateRejected(format!(
                "need z in [0,1) and L >= 0, got z = {jump_point}, L = {log_lip}"
            )));
        }
        let floor = (-log_lip).exp() * (1.0 - GRID_TOLERANCE);
        let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        if min < floor {
            return Err(QdsError::CertificateRejected(format!(
                "minimum {min:e} below e^-L = {:e}",
                (-log_lip).exp()
            )));
        }
        let m = self.cells();
        let h = self.width();
        for i in 0..m {
            let j = (i + 1) % m;
            let lo = self.midpoint(i);
            let hi = lo + h;
            let crosses = (jump_point >= lo && jump_point < hi) || (jump_point + 1.0 >= lo && jump_point + 1.0 < hi);
            if crosses {
                continue;
            }
            let slope = (self.values[j].ln() - self.values[i].ln()).abs() / h;
            if slope > log_lip * (1.0 + GRID_TOLERANCE) + 1e-12 {
                return Err(QdsError::CertificateRejected(format!(
                    "log-slope {slope:.6} between cells {i} and {j} exceeds L = {log_lip}"
                )));
            }
        }
        self.certificate = Some(DlCertificate { jump_point, log_lip });
        Ok(self)
    }

    pub fn certificate(&self) -> Option<DlCertificate> {
        self.certificate
    }

    pub fn cells(&self) -> usize {
        self.values.len()
    }

    pub fn width(&self) -> f64 {
        1.0 / self.values.len() as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.width()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Midpoint-rule integral; 1 up to rounding.
    pub fn integral(&self) -> f64 {
        grid_integral(&self.values)
    }

    /// `∫ f ρ` by the midpoint rule.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        let h = self.width();
        pairwise_sum_by(self.values.len(), |i| self.values[i] * f((i as f64 + 0.5) * h)) * h
    }

    pub fn l1_distance(&self, other: &Density) -> f64 {
        grid_l1(&self.values, &other.values)
    }

    pub fn sup_distance(&self, other: &Density) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Periodic piecewise-linear interpolation through the midpoint values.
    pub fn interpolate(&self, y: f64) -> f64 {
        interpolate_periodic(&self.values, y)
    }
}

/// Midpoint-rule integral of a grid function on `[0, 1)`.
pub(crate) fn grid_integral(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i]) / values.len() as f64
}

pub(crate) fn grid_l1(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "grid size mismatch");
    pairwise_sum_by(a.len(), |i| (a[i] - b[i]).abs()) / a.len() as f64
}

pub(crate) fn interpolate_periodic(values: &[f64], y: f64) -> f64 {
    let m = values.len();
    let s = y * m as f64 - 0.5;
    let base = s.floor();
    let frac = s - base;
    let i = (base as i64).rem_euclid(m as i64) as usize;
    let j = (i + 1) % m;
    values[i] + frac * (values[j] - values[i])
}

/// Pairwise (cascade) summation of `term(0..len)`; fixed association order.
pub(crate) fn pairwise_sum_by(len: usize, term: impl Fn(usize) -> f64 + Copy) -> f64 {
    fn rec(lo: usize, hi: usize, term: impl Fn(usize) -> f64 + Copy) -> f64 {
        if hi - lo <= 32 {
            (lo..hi).map(term).sum()
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    if len == 0 {
        0.0
    } else {
        rec(0, len, term)
    }
}
