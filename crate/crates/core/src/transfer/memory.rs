use super::operator::Pushforward;
use crate::error::{QdsError, Result};
use crate::phase::density::grid_l1;
use crate::phase::{ArraySpec, Density};

/// L¹ distances below this are treated as quadrature noise.
pub const NOISE_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryLossReport {
    /// `(k, ‖ρ¹_{n,k} − ρ²_{n,k}‖_{L¹})` for `k = 0..=k_max`.
    pub distances: Vec<(usize, f64)>,
    /// Fitted contraction rate per step; `0` when no fit was possible.
    pub theta_hat: f64,
    /// R² of the log-linear fit.
    pub fit_residual: f64,
}

impl MemoryLossReport {
    pub fn passes(&self) -> bool {
        self.theta_hat > 0.0 && self.theta_hat < 1.0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,l1\n");
        for (k, l1) in &self.distances {
            s.push_str(&format!("{k},{l1:e}\n"));
        }
        s
    }
}

/// Least-squares fit of `log l1` against `k` over the prefix of points above
/// [`NOISE_FLOOR`]. Returns `(theta_hat, r_squared)`, or `(0, 0)` when fewer
/// than three points are usable.
pub fn fit_decay_rate(distances: &[(usize, f64)]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = distances
        .iter()
        .take_while(|(_, d)| *d > NOISE_FLOOR)
        .map(|&(k, d)| (k as f64, d.ln()))
        .collect();
    if pts.len() < 3 {
        return (0.0, 0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope.exp(), r2)
}

/// Exponential loss of memory between two certified initial densities pushed
/// forward along row `n` of the array.
pub fn memory_loss_curve(
    spec: &ArraySpec,
    n: usize,
    psi1: &Density,
    psi2: &Density,
    k_max: usize,
) -> Result<MemoryLossReport> {
    if psi1.certificate().is_none() || psi2.certificate().is_none() {
        return Err(QdsError::InvalidArgument(
            "memory-loss curves need certified D_L densities".into(),
        ));
    }
    if psi1.cells() != psi2.cells() {
        return Err(QdsError::GridMismatch("densities live on different grids".into()));
    }
    if k_max > n {
        return Err(QdsError::IndexOutOfRange { n, k: k_max });
    }
    // the operators are linear, so pushing the difference forward is exact
    let diff: Vec<f64> = psi1.values().iter().zip(psi2.values()).map(|(a, b)| a - b).collect();
    let zeros = vec![0.0; diff.len()];
    let mut push = Pushforward::new(spec, n, diff);
    let mut distances = vec![(0, grid_l1(push.current(), &zeros))];
    for k in 1..=k_max {
        let l1 = grid_l1(push.step()?, &zeros);
        distances.push((k, l1));
    }
    let (theta_hat, fit_residual) = fit_decay_rate(&distances);
    Ok(MemoryLossReport {
        distances,
        theta_hat,
        fit_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::MapCurve;
    use std::f64::consts::TAU;

    fn doubling() -> ArraySpec {
        ArraySpec::on_curve(MapCurve::doubling())
    }

    #[test]
    fn identical_densities_never_separate() {
        let psi = Density::uniform(512).certify(0.0, 0.0).unwrap();
        let r = memory_loss_curve(&doubling(), 100, &psi, &psi, 10).unwrap();
        assert!(r.distances.iter().all(|&(_, d)| d == 0.0));
        assert_eq!(r.theta_hat, 0.0);
    }

    #[test]
    fn first_harmonic_is_forgotten_in_one_step() {
        let one = Density::uniform(4096).certify(0.0, 0.0).unwrap();
        let bump = Density::from_fn(4096, |x| 1.0 + 0.3 * (TAU * x).cos())
            .unwrap()
            .certify(0.0, 0.3 * TAU / 0.7)
            .unwrap();
        let r = memory_loss_curve(&doubling(), 100, &one, &bump, 5).unwrap();
        assert!((r.distances[0].1 - 0.6 / std::f64::consts::PI).abs() < 1e-6);
        assert!(r.distances[1..].iter().all(|&(_, d)| d < 1e-14));
        assert_eq!(r.theta_hat, 0.0);
    }

    #[test]
    fn sawtooth_halves_each_step() {
        let one = Density::uniform(4096).certify(0.0, 0.0).unwrap();
        let saw = Density::from_fn(4096, |x| 1.0 + 0.3 * (x - 0.5))
            .unwrap()
            .certify(0.0, 0.3 / 0.85)
            .unwrap();
        let r = memory_loss_curve(&doubling(), 100, &one, &saw, 30).unwrap();
        assert!((r.theta_hat - 0.5).abs() < 0.05, "{}", r.theta_hat);
        assert!(r.fit_residual > 0.98);
        assert!(r.passes());
    }

    #[test]
    fn uncertified_input_is_rejected() {
        let a = Density::uniform(64);
        assert!(memory_loss_curve(&doubling(), 10, &a, &a, 3).is_err());
    }

    #[test]
    fn fit_sentinel() {
        assert_eq!(fit_decay_rate(&[(0, 1.0), (1, 0.0)]), (0.0, 0.0));
        let pts: Vec<_> = (0..10).map(|k| (k, 0.3f64.powi(k as i32))).collect();
        let (theta, r2) = fit_decay_rate(&pts);
        assert!((theta - 0.3).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
