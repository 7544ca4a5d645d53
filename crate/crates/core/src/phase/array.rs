use super::{CircleMap, MapCurve, SineTerm};
use crate::error::{QdsError, Result};

/// Frequency of the sine term added in perturbed mode.
pub const PERTURBATION_FREQUENCY: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ArrayMode {
    /// `T_{n,k} = γ_{k/n}`.
    OnCurve,
    /// `T_{n,k} = γ_{k/n}` plus `(−1)^k · scale · n^{−η} · sin(2πx)`.
    Perturbed { scale: f64 },
}

/// The triangular array `{T_{n,k}}` built over a curve.
#[derive(Debug, Clone, PartialEq)]
pub struct ArraySpec {
    pub curve: MapCurve,
    pub mode: ArrayMode,
}

impl ArraySpec {
    pub fn on_curve(curve: MapCurve) -> Self {
        Self {
            curve,
            mode: ArrayMode::OnCurve,
        }
    }

    pub fn perturbed(curve: MapCurve, scale: f64) -> Result<Self> {
        if !(scale >= 0.0) || !scale.is_finite() {
            return Err(QdsError::InvalidArgument(format!(
                "perturbation scale must be a nonnegative number, got {scale}"
            )));
        }
        Ok(Self {
            curve,
            mode: ArrayMode::Perturbed { scale },
        })
    }

    /// `T_{n,k}` for `1 ≤ k ≤ n`.
    pub fn map(&self, n: usize, k: usize) -> Result<CircleMap> {
        if k == 0 || k > n {
            return Err(QdsError::IndexOutOfRange { n, k });
        }
        let base = self.curve.at(k as f64 / n as f64);
        match self.mode {
            ArrayMode::OnCurve => Ok(base),
            ArrayMode::Perturbed { scale } => {
                if scale == 0.0 {
                    return Ok(base);
                }
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let amp = sign * scale * (n as f64).powf(-self.curve.holder_exponent());
                let map = base.with_term(SineTerm {
                    freq: PERTURBATION_FREQUENCY,
                    amp,
                })?;
                map.check(self.curve.params())?;
                Ok(map)
            }
        }
    }

    /// All maps `T_{n,1}, …, T_{n,n}` of row `n`.
    pub fn row(&self, n: usize) -> Result<Vec<CircleMap>> {
        (1..=n).map(|k| self.map(n, k)).collect()
    }

    /// True when every map of every row is the doubling map.
    pub fn is_doubling(&self) -> bool {
        let unperturbed = match self.mode {
            ArrayMode::OnCurve => true,
            ArrayMode::Perturbed { scale } => scale == 0.0,
        };
        unperturbed && self.curve.is_constant_doubling()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{dc1_distance, ModelParams, Polynomial};
    use std::f64::consts::TAU;

    fn linear_curve(eta: f64) -> MapCurve {
        MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), eta, ModelParams::default()).unwrap()
    }

    #[test]
    fn on_curve_rows() {
        let spec = ArraySpec::on_curve(linear_curve(1.0));
        assert_eq!(spec.map(100, 1).unwrap(), spec.curve.at(0.01));
        assert_eq!(spec.map(100, 100).unwrap(), spec.curve.at(1.0));
        assert!(matches!(spec.map(10, 0), Err(QdsError::IndexOutOfRange { .. })));
        assert!(spec.map(10, 11).is_err());
    }

    #[test]
    fn perturbation_size() {
        let spec = ArraySpec::perturbed(linear_curve(0.5), 1.0).unwrap();
        let n = 10_000;
        for k in [1, 17, 5000, 10_000] {
            let d = dc1_distance(&spec.map(n, k).unwrap(), &spec.curve.at(k as f64 / n as f64));
            assert!(d <= (1.0 + TAU) * 0.01 + 1e-9, "k={k}: {d}");
        }
    }

    #[test]
    fn rate_condition_is_uniform_in_n() {
        let eta = 0.5;
        let spec = ArraySpec::perturbed(linear_curve(eta), 0.2).unwrap();
        let mut constants = Vec::new();
        for p in 8..=16 {
            let n = 1usize << p;
            let worst = [1, n / 3, n / 2, n]
                .into_iter()
                .map(|k| dc1_distance(&spec.map(n, k).unwrap(), &spec.curve.at(k as f64 / n as f64)))
                .fold(0.0, f64::max);
            constants.push((n as f64).powf(eta) * worst);
        }
        let max = constants.iter().copied().fold(0.0, f64::max);
        assert!(max <= 0.2 * (1.0 + TAU) + 1e-8, "{constants:?}");
    }

    #[test]
    fn large_perturbation_is_rejected() {
        let spec = ArraySpec::perturbed(linear_curve(0.5), 5.0).unwrap();
        assert!(matches!(spec.map(4, 1), Err(QdsError::BoundViolation(_))));
    }

    #[test]
    fn doubling_detection() {
        assert!(ArraySpec::on_curve(MapCurve::doubling()).is_doubling());
        assert!(!ArraySpec::on_curve(linear_curve(1.0)).is_doubling());
        assert!(!ArraySpec::perturbed(MapCurve::doubling(), 0.1).unwrap().is_doubling());
    }
}
