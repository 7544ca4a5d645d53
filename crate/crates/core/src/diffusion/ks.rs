use libm::erfc;

use crate::error::{QdsError, Result};
use crate::montecarlo::MIN_ENSEMBLE;

/// `Φ(x)` for the standard normal.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Kolmogorov–Smirnov distance between the empirical law of `sample` and
/// `N(0, variance)`. A zero variance compares against the point mass at 0,
/// giving the fraction of nonzero samples.
pub fn ks_statistic(sample: &[f64], variance: f64) -> Result<f64> {
    if sample.len() < MIN_ENSEMBLE {
        return Err(QdsError::SampleTooSmall {
            got: sample.len(),
            required: MIN_ENSEMBLE,
        });
    }
    if !(variance >= 0.0) {
        return Err(QdsError::InvalidArgument(format!(
            "variance must be nonnegative, got {variance}"
        )));
    }
    let n = sample.len() as f64;
    if variance == 0.0 {
        return Ok(sample.iter().filter(|&&v| v != 0.0).count() as f64 / n);
    }
    let sd = variance.sqrt();
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // ties: the empirical CDF jumps over the whole run at once
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = normal_cdf(x / sd);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    Ok(d)
}
