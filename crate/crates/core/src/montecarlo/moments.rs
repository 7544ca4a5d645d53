use super::ensemble::PathEnsemble;
use crate::error::{QdsError, Result};
use crate::phase::density::pairwise_sum_by;

/// Smallest ensemble accepted by [`ensemble_moments`].
pub const MIN_ENSEMBLE: usize = 100;

const JACKKNIFE_GROUPS: usize = 100;

/// An estimate with its grouped-jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalMoments {
    pub t: f64,
    pub component: usize,
    pub mean: Estimate,
    /// Unbiased sample variance.
    pub variance: Estimate,
    /// Fourth central moment.
    pub m4: Estimate,
    pub excess_kurtosis: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMoments {
    pub s: f64,
    pub t: f64,
    pub component: usize,
    pub covariance: Estimate,
    /// `E|χ(t) − χ(s)|⁴ / |t − s|²`; `None` when `s = t`.
    pub kolmogorov_ratio: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub members: usize,
    pub marginals: Vec<MarginalMoments>,
    pub pairs: Vec<PairMoments>,
}

impl MomentReport {
    pub fn marginal(&self, t_index: usize, component: usize, dim: usize) -> &MarginalMoments {
        &self.marginals[t_index * dim + component]
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = format!("members: {}\n", self.members);
        for m in &self.marginals {
            s.push_str(&format!(
                "t={:?} c={}: mean {:e} ± {:e}, var {:e} ± {:e}, m4 {:e} ± {:e}, excess_kurtosis {:e}\n",
                m.t,
                m.component,
                m.mean.value,
                m.mean.se,
                m.variance.value,
                m.variance.se,
                m.m4.value,
                m.m4.se,
                m.excess_kurtosis.value
            ));
        }
        for p in &self.pairs {
            s.push_str(&format!(
                "s={:?} t={:?} c={}: cov {:e} ± {:e}",
                p.s, p.t, p.component, p.covariance.value, p.covariance.se
            ));
            if let Some(k) = p.kolmogorov_ratio {
                s.push_str(&format!(", kolmogorov {:e} ± {:e}", k.value, k.se));
            }
            s.push('\n');
        }
        s
    }
}

/// Contiguous member blocks for the grouped jackknife.
fn blocks(members: usize) -> Vec<(usize, usize)> {
    let g = JACKKNIFE_GROUPS.min(members);
    (0..g).map(|b| (b * members / g, (b + 1) * members / g)).collect()
}

/// Per-block power sums of the given per-member quantities, followed by the
/// value of `stat` on the full sums and its jackknife standard error.
fn jackknife(
    members: usize,
    quantities: usize,
    term: impl Fn(usize, usize) -> f64,
    stat: impl Fn(&[f64], f64) -> f64,
) -> Estimate {
    let parts = blocks(members);
    let block_sums: Vec<Vec<f64>> = parts
        .iter()
        .map(|&(lo, hi)| {
            (0..quantities)
                .map(|q| pairwise_sum_by(hi - lo, |i| term(lo + i, q)))
                .collect()
        })
        .collect();
    let total: Vec<f64> = (0..quantities)
        .map(|q| pairwise_sum_by(block_sums.len(), |b| block_sums[b][q]))
        .collect();
    let value = stat(&total, members as f64);
    let g = parts.len() as f64;
    let leave_out: Vec<f64> = parts
        .iter()
        .zip(&block_sums)
        .map(|(&(lo, hi), sums)| {
            let rest: Vec<f64> = total.iter().zip(sums).map(|(t, s)| t - s).collect();
            stat(&rest, (members - (hi - lo)) as f64)
        })
        .collect();
    let mean = leave_out.iter().sum::<f64>() / g;
    let var = leave_out.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (g - 1.0) / g;
    Estimate { value, se: var.sqrt() }
}

/// Moments from sums of `y, y², y³, y⁴` of shifted data.
fn central(sums: &[f64], count: f64) -> (f64, f64, f64) {
    let (e1, e2, e3, e4) = (sums[0] / count, sums[1] / count, sums[2] / count, sums[3] / count);
    let var = e2 - e1 * e1;
    let m4 = e4 - 4.0 * e1 * e3 + 6.0 * e1 * e1 * e2 - 3.0 * e1.powi(4);
    (e1, var, m4)
}

/// Covariance from sums of `a, b, a·b`, with the `N/(N−1)` correction.
fn covariance(sums: &[f64], count: f64) -> f64 {
    (sums[2] / count - (sums[0] / count) * (sums[1] / count)) * count / (count - 1.0)
}

fn pilot_mean(x: &[f64]) -> f64 {
    pairwise_sum_by(x.len(), |i| x[i]) / x.len() as f64
}

/// Per-time moments and per-pair covariances and Kolmogorov ratios.
/// Pairs are index pairs into the ensemble's time grid.
pub fn ensemble_moments(ens: &PathEnsemble, t_pairs: &[(usize, usize)]) -> Result<MomentReport> {
    let members = ens.members();
    if members < MIN_ENSEMBLE {
        return Err(QdsError::SampleTooSmall {
            got: members,
            required: MIN_ENSEMBLE,
        });
    }
    let len = ens.t_grid.len();
    if let Some(&(a, b)) = t_pairs.iter().find(|(a, b)| *a >= len || *b >= len) {
        return Err(QdsError::GridMismatch(format!(
            "pair ({a}, {b}) outside a grid of {len} times"
        )));
    }
    let d = ens.dim;
    let mut marginals = Vec::with_capacity(len * d);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(len * d);
    let mut shifts = Vec::with_capacity(len * d);
    for j in 0..len {
        for c in 0..d {
            let x = ens.marginal(j, c);
            let shift = pilot_mean(&x);
            let y: Vec<f64> = x.iter().map(|v| v - shift).collect();
            let term = |i: usize, q: usize| y[i].powi(q as i32 + 1);
            let mean = jackknife(members, 4, term, |s, n| s[0] / n + shift);
            let variance = jackknife(members, 2, term, |s, n| {
                let e1 = s[0] / n;
                (s[1] / n - e1 * e1) * n / (n - 1.0)
            });
            let m4 = jackknife(members, 4, term, |s, n| central(s, n).2);
            let excess_kurtosis = jackknife(members, 4, term, |s, n| {
                let (_, var, m4) = central(s, n);
                if var > 0.0 {
                    m4 / (var * var) - 3.0
                } else {
                    0.0
                }
            });
            marginals.push(MarginalMoments {
                t: ens.t_grid[j],
                component: c,
                mean,
                variance,
                m4,
                excess_kurtosis,
            });
            columns.push(y);
            shifts.push(shift);
        }
    }

    let mut pairs = Vec::new();
    for &(a, b) in t_pairs {
        for c in 0..d {
            let ya = &columns[a * d + c];
            let yb = &columns[b * d + c];
            let cov_term = |i: usize, q: usize| match q {
                0 => ya[i],
                1 => yb[i],
                _ => ya[i] * yb[i],
            };
            let covariance = jackknife(members, 3, cov_term, covariance);
            let (s, t) = (ens.t_grid[a], ens.t_grid[b]);
            let kolmogorov_ratio = (s != t).then(|| {
                let gap = (t - s).abs();
                let shift = shifts[b * d + c] - shifts[a * d + c];
                jackknife(
                    members,
                    1,
                    |i, _| (yb[i] - ya[i] + shift).powi(4),
                    |sums, n| sums[0] / n / (gap * gap),
                )
            });
            pairs.push(PairMoments {
                s,
                t,
                component: c,
                covariance,
                kolmogorov_ratio,
            });
        }
    }
    Ok(MomentReport {
        members,
        marginals,
        pairs,
    })
}

/// All pairs `(i, j)`, `i < j`, of grid indices whose times are dyadic
/// rationals with denominator at most `2^levels`.
pub fn dyadic_pairs(t_grid: &[f64], levels: u32) -> Vec<(usize, usize)> {
    let scale = (1u64 << levels) as f64;
    let dyadic: Vec<usize> = t_grid
        .iter()
        .enumerate()
        .filter(|(_, t)| {
            let x = *t * scale;
            x == x.round()
        })
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::new();
    for (p, &i) in dyadic.iter().enumerate() {
        for &j in &dyadic[p + 1..] {
            if t_grid[i] != t_grid[j] {
                out.push((i, j));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CenteringKind;
    use crate::montecarlo::{Backend, EnsembleMeta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn gaussian_ensemble(members: usize) -> PathEnsemble {
        // χ(t) = √t·Z with a single Z per member
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let grid = vec![0.0, 0.25, 1.0];
        let mut values = Vec::new();
        for _ in 0..members {
            let z: f64 = rng.sample(StandardNormal);
            values.extend(grid.iter().map(|t: &f64| t.sqrt() * z + 3.0));
        }
        let meta = EnsembleMeta {
            seed: 42,
            initial: "test".into(),
            observable: "test".into(),
            backend: Backend::Float,
        };
        PathEnsemble::new(16, grid, 1, CenteringKind::Custom, meta, values).unwrap()
    }

    #[test]
    fn gaussian_moments() {
        let e = gaussian_ensemble(50_000);
        let r = ensemble_moments(&e, &[(1, 2), (2, 2)]).unwrap();
        let m = r.marginal(2, 0, 1);
        assert!((m.mean.value - 3.0).abs() < 4.0 * m.mean.se);
        assert!((m.mean.se - (1.0f64 / 50_000.0).sqrt()).abs() < 0.002);
        assert!((m.variance.value - 1.0).abs() < 4.0 * m.variance.se);
        assert!((m.m4.value - 3.0).abs() < 4.0 * m.m4.se);
        assert!(m.excess_kurtosis.value.abs() < 0.1);
        let p = &r.pairs[0];
        assert!((p.covariance.value - 0.5).abs() < 4.0 * p.covariance.se);
        // (1 − 0.5)⁴ · 3 / 0.75²
        let k = p.kolmogorov_ratio.unwrap();
        assert!((k.value - 0.1875 / 0.5625).abs() < 4.0 * k.se);
    }

    #[test]
    fn diagonal_pair_is_variance() {
        let e = gaussian_ensemble(1000);
        let r = ensemble_moments(&e, &[(1, 1), (2, 2)]).unwrap();
        assert_eq!(r.pairs[0].covariance.value, r.marginal(1, 0, 1).variance.value);
        assert_eq!(r.pairs[1].covariance.value, r.marginal(2, 0, 1).variance.value);
        assert!(r.pairs[0].kolmogorov_ratio.is_none());
    }

    #[test]
    fn small_ensembles_rejected() {
        let e = gaussian_ensemble(99);
        assert!(matches!(
            ensemble_moments(&e, &[]),
            Err(QdsError::SampleTooSmall { got: 99, .. })
        ));
    }

    #[test]
    fn dyadic_selection() {
        let grid: Vec<f64> = (0..=8).map(|i| i as f64 / 8.0).collect();
        let p = dyadic_pairs(&grid, 2);
        assert_eq!(p.len(), 10);
        assert!(p.contains(&(0, 8)) && p.contains(&(2, 6)) && !p.contains(&(1, 2)));
    }
}
