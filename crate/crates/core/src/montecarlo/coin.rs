use statrs::function::factorial::ln_binomial;

use crate::error::{QdsError, Result};

/// Exact law of `χ_n(1) = n^{−1/2} Σ_{k<n} f(x_k)` for the doubling map,
/// the `±1` step observable and Lebesgue initial measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CoinTable {
    pub n: usize,
    /// `(2j − n)/√n` for `j = 0..=n`.
    pub values: Vec<f64>,
    /// `C(n, j)·2^{−n}`.
    pub probs: Vec<f64>,
}

pub fn coin_marginal_exact(n: usize) -> Result<CoinTable> {
    if n == 0 {
        return Err(QdsError::InvalidArgument("n must be at least 1".into()));
    }
    let root = (n as f64).sqrt();
    let ln_half = -(n as f64) * std::f64::consts::LN_2;
    let values = (0..=n).map(|j| (2.0 * j as f64 - n as f64) / root).collect();
    let probs = (0..=n)
        .map(|j| (ln_binomial(n as u64, j as u64) + ln_half).exp())
        .collect();
    Ok(CoinTable { n, values, probs })
}

impl CoinTable {
    /// Index `j` of the support point nearest to `value`.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        let j = ((value * (self.n as f64).sqrt() + self.n as f64) / 2.0).round();
        (0.0..=self.n as f64).contains(&j).then_some(j as usize)
    }

    /// Total variation distance between the empirical law of `sample` and
    /// the table. Sample values off the support count as pure mismatch.
    pub fn tv_distance(&self, sample: &[f64]) -> f64 {
        let mut counts = vec![0usize; self.n + 1];
        let mut outside = 0usize;
        let root = (self.n as f64).sqrt();
        for &v in sample {
            match self.index_of(v) {
                Some(j) if (self.values[j] - v).abs() * root < 1e-6 => counts[j] += 1,
                _ => outside += 1,
            }
        }
        let total = sample.len() as f64;
        let inside: f64 = counts
            .iter()
            .zip(&self.probs)
            .map(|(&c, p)| (c as f64 / total - p).abs())
            .sum();
        0.5 * (inside + outside as f64 / total)
    }

    pub fn variance(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * v * p).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tables() {
        let one = coin_marginal_exact(1).unwrap();
        assert_eq!(one.values, vec![-1.0, 1.0]);
        assert!(one.probs.iter().all(|p| (p - 0.5).abs() < 1e-15));
        let two = coin_marginal_exact(2).unwrap();
        let r2 = 2f64.sqrt();
        for (v, w) in two.values.iter().zip([-r2, 0.0, r2]) {
            assert!((v - w).abs() < 1e-15);
        }
        for (p, w) in two.probs.iter().zip([0.25, 0.5, 0.25]) {
            assert!((p - w).abs() < 1e-14);
        }
    }

    #[test]
    fn normalized_with_unit_variance() {
        for n in [10, 4096, 65_536] {
            let t = coin_marginal_exact(n).unwrap();
            assert!((t.probs.iter().sum::<f64>() - 1.0).abs() < 1e-10, "n={n}");
            assert!((t.variance() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn tv_of_exact_counts() {
        let t = coin_marginal_exact(2).unwrap();
        let r2 = 2f64.sqrt();
        assert!(t.tv_distance(&[-r2, 0.0, 0.0, r2]).abs() < 1e-14);
        assert!((t.tv_distance(&[0.0, 0.0]) - 0.5).abs() < 1e-14);
        assert!((t.tv_distance(&[0.3]) - 1.0).abs() < 1e-14);
    }
}
