use nalgebra::DMatrix;

use super::ks::ks_statistic;
use super::sde::gaussian_marginal;
use crate::coefficients::DiffusionCurve;
use crate::error::{QdsError, Result};
use crate::montecarlo::{PathEnsemble, MIN_ENSEMBLE};
use crate::phase::density::pairwise_sum_by;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub ks: f64,
    pub cov: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { ks: 0.02, cov: 0.03 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KsEntry {
    pub t: f64,
    pub component: usize,
    pub statistic: f64,
}

/// `|Côv(χ_n(s)_i, χ_n(t)_j) − [χ]_{min(s,t), ij}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovDeviation {
    pub s: f64,
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n: usize,
    pub members: usize,
    pub ks: Vec<KsEntry>,
    pub cov: Vec<CovDeviation>,
    /// Largest entry of `|E Σ_j Δχ_j Δχ_jᵀ − [χ]_T|` at the last grid time `T`.
    pub qv_deviation: f64,
    pub tolerances: Tolerances,
}

impl ComparisonReport {
    pub fn max_ks(&self) -> f64 {
        self.ks.iter().map(|e| e.statistic).fold(0.0, f64::max)
    }

    pub fn max_cov_deviation(&self) -> f64 {
        self.cov.iter().map(|e| e.deviation).fold(0.0, f64::max)
    }

    pub fn ks_passed(&self) -> bool {
        self.max_ks() < self.tolerances.ks
    }

    pub fn cov_passed(&self) -> bool {
        self.max_cov_deviation() < self.tolerances.cov
    }

    pub fn qv_passed(&self) -> bool {
        self.qv_deviation < self.tolerances.cov
    }

    pub fn passed(&self) -> bool {
        self.ks_passed() && self.cov_passed() && self.qv_passed()
    }

    /// 0 on pass, 3 on statistical failure.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            3
        }
    }

    /// Largest KS statistic at time `t` over components.
    pub fn ks_at(&self, t: f64) -> f64 {
        self.ks
            .iter()
            .filter(|e| e.t == t)
            .map(|e| e.statistic)
            .fold(0.0, f64::max)
    }

    /// Largest covariance deviation on the diagonal `s = t`.
    pub fn variance_deviation_at(&self, t: f64) -> f64 {
        self.cov
            .iter()
            .filter(|e| e.s == t && e.t == t)
            .map(|e| e.deviation)
            .fold(0.0, f64::max)
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let verdict = |ok: bool| if ok { "pass" } else { "fail" };
        let mut s = String::new();
        s.push_str(&format!("n: {}\n", self.n));
        s.push_str(&format!("members: {}\n", self.members));
        s.push_str(&format!("tol.ks: {}\n", self.tolerances.ks));
        s.push_str(&format!("tol.cov: {}\n", self.tolerances.cov));
        s.push_str(&format!("max_ks: {:e}\n", self.max_ks()));
        s.push_str(&format!("max_cov_dev: {:e}\n", self.max_cov_deviation()));
        s.push_str(&format!("qv_dev: {:e}\n", self.qv_deviation));
        s.push_str(&format!("ks: {}\n", verdict(self.ks_passed())));
        s.push_str(&format!("cov: {}\n", verdict(self.cov_passed())));
        s.push_str(&format!("qv: {}\n", verdict(self.qv_passed())));
        s.push_str(&format!("result: {}\n", verdict(self.passed())));
        for e in &self.ks {
            s.push_str(&format!("ks[t={:?},c={}]: {:e}\n", e.t, e.component, e.statistic));
        }
        s
    }
}

/// Compares `ens` against the Gaussian process with covariance
/// `[χ]_{min(s,t)}` through per-time KS statistics, the covariance kernel on
/// all grid pairs, and the realized quadratic variation.
pub fn compare_ensemble(ens: &PathEnsemble, sig: &DiffusionCurve, tol: Tolerances) -> Result<ComparisonReport> {
    let members = ens.members();
    if members < MIN_ENSEMBLE {
        return Err(QdsError::SampleTooSmall {
            got: members,
            required: MIN_ENSEMBLE,
        });
    }
    if ens.dim != sig.dim() {
        return Err(QdsError::GridMismatch(format!(
            "ensemble has dimension {} but the diffusion curve has {}",
            ens.dim,
            sig.dim()
        )));
    }
    let (lo, hi) = (sig.t_grid[0], sig.t_grid[sig.t_grid.len() - 1]);
    if ens.t_grid.iter().any(|&t| t < lo || t > hi) {
        return Err(QdsError::GridMismatch(format!(
            "ensemble times fall outside the diffusion grid [{lo}, {hi}]"
        )));
    }
    let d = ens.dim;
    let len = ens.t_grid.len();
    let qv: Vec<DMatrix<f64>> = ens.t_grid.iter().map(|&t| gaussian_marginal(sig, t)).collect();

    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(len * d);
    let mut ks = Vec::new();
    for (j, &t) in ens.t_grid.iter().enumerate() {
        for c in 0..d {
            let x = ens.marginal(j, c);
            ks.push(KsEntry {
                t,
                component: c,
                statistic: ks_statistic(&x, qv[j][(c, c)].max(0.0))?,
            });
            let mean = pairwise_sum_by(members, |i| x[i]) / members as f64;
            columns.push(x.into_iter().map(|v| v - mean).collect());
        }
    }

    let scale = 1.0 / (members as f64 - 1.0);
    let mut cov = Vec::new();
    for a in 0..len {
        for b in a..len {
            let reference = &qv[a.min(b)];
            for i in 0..d {
                for j in 0..d {
                    if a == b && j < i {
                        continue;
                    }
                    let (u, v) = (&columns[a * d + i], &columns[b * d + j]);
                    let sample = pairwise_sum_by(members, |m| u[m] * v[m]) * scale;
                    cov.push(CovDeviation {
                        s: ens.t_grid[a],
                        t: ens.t_grid[b],
                        i,
                        j,
                        deviation: (sample - reference[(i, j)]).abs(),
                    });
                }
            }
        }
    }

    let mut realized = DMatrix::<f64>::zeros(d, d);
    for step in 0..len.saturating_sub(1) {
        for i in 0..d {
            for j in 0..d {
                let s = pairwise_sum_by(members, |m| {
                    let di = ens.value(m, step + 1, i) - ens.value(m, step, i);
                    let dj = ens.value(m, step + 1, j) - ens.value(m, step, j);
                    di * dj
                });
                realized[(i, j)] += s / members as f64;
            }
        }
    }
    let target = &qv[len - 1] - &qv[0];
    let qv_deviation = (realized - target).amax();

    Ok(ComparisonReport {
        n: ens.n,
        members,
        ks,
        cov,
        qv_deviation,
        tolerances: tol,
    })
}
