use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares fit of `ln y = a + b ln n` with a two-sided 95% interval on `b`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub points: usize,
}

impl SlopeFit {
    pub fn contains(&self, lo: f64, hi: f64) -> bool {
        self.slope >= lo && self.slope <= hi
    }
}

/// `None` when fewer than three points are given or some `y` is not positive.
pub fn loglog_fit(n: &[usize], y: &[f64]) -> Option<SlopeFit> {
    if n.len() != y.len() || n.len() < 3 || y.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let x: Vec<f64> = n.iter().map(|&v| (v as f64).ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(&ly)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let df = k - 2.0;
    let stderr = (rss / df / sxx).sqrt();
    let q = StudentsT::new(0.0, 1.0, df).ok()?.inverse_cdf(0.975);
    Some(SlopeFit {
        slope,
        intercept,
        stderr,
        ci_low: slope - q * stderr,
        ci_high: slope + q * stderr,
        points: x.len(),
    })
}
