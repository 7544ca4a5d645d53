//! Exact means for the inadmissible initial measure
//! `μ = (1 − ε)·m + Σ_{j≥K} j⁻² ν_j` under doubling with the `±1` step
//! observable, where `ν_j` is uniform on `[0, 2^{−2^j})`.

use super::centering::{CenteringCurve, CenteringKind};
use super::drift::check_grid;
use crate::error::{QdsError, Result};

/// `Σ_{j≥J} j⁻²` (the trigamma function at `J`), `J ≥ 1`.
pub fn inverse_square_tail(start: u64) -> f64 {
    assert!(start >= 1, "tail index must be positive");
    let mut x = start as f64;
    let mut head = 0.0;
    while x < 20.0 {
        head += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // asymptotic expansion with Bernoulli coefficients
    let series = inv
        * (1.0
            + inv / 2.0
            + inv2
                * (1.0 / 6.0
                    + inv2
                        * (-1.0 / 30.0
                            + inv2
                                * (1.0 / 42.0
                                    + inv2
                                        * (-1.0 / 30.0
                                            + inv2 * (5.0 / 66.0 + inv2 * (-691.0 / 2730.0 + inv2 * 7.0 / 6.0)))))));
    head + series
}

/// Mass `ε = Σ_{j≥K} j⁻²` of the singular part; rejected unless `ε < 1/2`.
pub fn inadmissible_epsilon(k: u64) -> Result<f64> {
    if k == 0 {
        return Err(QdsError::InvalidArgument("K must be positive".into()));
    }
    let eps = inverse_square_tail(k);
    if eps >= 0.5 {
        return Err(QdsError::InvalidArgument(format!(
            "K = {k} gives singular mass {eps:.4} >= 1/2"
        )));
    }
    Ok(eps)
}

/// Smallest `K` with `Σ_{j≥K} j⁻² < 1/2`.
pub fn smallest_admissible_k() -> u64 {
    (1..)
        .find(|&k| inverse_square_tail(k) < 0.5)
        .expect("tail decreases to zero")
}

/// `μ(ζ_n(·, t)) = −Σ_{j≥K} j⁻² · min(nt, 2^j)/n`; the Lebesgue part
/// contributes nothing since the step observable has zero mean.
pub fn inadmissible_mean_exact(n: usize, t: f64, k: u64) -> Result<f64> {
    inadmissible_epsilon(k)?;
    if n == 0 || !(0.0..=1.0).contains(&t) {
        return Err(QdsError::InvalidArgument(format!(
            "need n >= 1 and t in [0, 1], got n={n}, t={t}"
        )));
    }
    let nf = n as f64;
    let nt = nf * t;
    let mut j = k;
    let mut head = 0.0;
    // terms whose all-(−1) phase ends before time nt
    while j < 1000 && 2f64.powi(j as i32) < nt {
        let jf = j as f64;
        head += 2f64.powi(j as i32) / (nf * jf * jf);
        j += 1;
    }
    Ok(-head - t * inverse_square_tail(j))
}

/// The exact inadmissible-measure centering on a grid.
pub fn inadmissible_centering(n: usize, k: u64, t_grid: &[f64]) -> Result<CenteringCurve> {
    check_grid(t_grid)?;
    let values = t_grid
        .iter()
        .map(|&t| inadmissible_mean_exact(n, t, k).map(|v| vec![v]))
        .collect::<Result<Vec<_>>>()?;
    Ok(CenteringCurve {
        t_grid: t_grid.to_vec(),
        values,
        kind: CenteringKind::MeasureMean("inadmissible".into()),
    })
}

/// `t·√n / (log₂(nt) + 1)²`, the size of the single dominant term at
/// `j ≈ log₂(nt)` after `√n` scaling.
pub fn inadmissible_divergence_bound(n: usize, t: f64) -> f64 {
    let nt = n as f64 * t;
    t * (n as f64).sqrt() / (nt.log2() + 1.0).powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oracle_tail(j: u64) -> f64 {
        // π²/6 minus a compensated head sum
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for i in 1..j {
            let y = 1.0 / (i as f64 * i as f64) - comp;
            let s = sum + y;
            comp = (s - sum) - y;
            sum = s;
        }
        PI * PI / 6.0 - sum
    }

    #[test]
    fn tail_matches_zeta_two() {
        for j in [1, 2, 3, 7, 19, 20, 21, 64, 1000] {
            let got = inverse_square_tail(j);
            assert!((got - oracle_tail(j)).abs() < 1e-14 * got.max(1.0), "j={j}");
        }
        assert!((inverse_square_tail(1) - PI * PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn k_selection() {
        assert_eq!(smallest_admissible_k(), 3);
        assert!(inadmissible_epsilon(2).is_err());
        assert!((inadmissible_epsilon(3).unwrap() - 0.394934066848).abs() < 1e-11);
    }

    #[test]
    fn early_times_see_full_mass() {
        let eps = inadmissible_epsilon(3).unwrap();
        for (n, t) in [(64usize, 0.125), (1 << 10, 0.005), (8, 1.0)] {
            let v = inadmissible_mean_exact(n, t, 3).unwrap();
            assert!((v + t * eps).abs() < 1e-15, "n={n} t={t}");
        }
    }

    #[test]
    fn brute_force_at_t_one() {
        for p in 3..=24 {
            let n = 1usize << p;
            let mut brute = 0.0;
            let mut j = 3u64;
            while (1u64 << j) <= n as u64 {
                brute -= (1u64 << j) as f64 / n as f64 / (j * j) as f64;
                j += 1;
            }
            brute -= oracle_tail(j);
            let got = inadmissible_mean_exact(n, 1.0, 3).unwrap();
            assert!((got - brute).abs() < 1e-12, "n={n}: {got} vs {brute}");
            let lg = p as f64;
            let single = (1.0 / (lg + 2.0).powi(2)) * ((2f64).powf(lg + 1.0)).min(n as f64) / n as f64;
            assert!(got <= -single);
        }
    }

    #[test]
    fn scaled_mean_grows() {
        let mut prev = 0.0;
        for p in 10..=20 {
            let n = 1usize << p;
            let v = (n as f64).sqrt() * inadmissible_mean_exact(n, 1.0, 3).unwrap().abs();
            assert!(v > prev, "n=2^{p}");
            assert!(v > inadmissible_divergence_bound(n, 1.0));
            prev = v;
        }
    }

    #[test]
    fn centering_starts_at_zero() {
        let c = inadmissible_centering(256, 3, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(c.values[0][0], 0.0);
        assert!(c.values[2][0] < c.values[1][0]);
    }
}
