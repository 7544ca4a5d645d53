//! Coefficients, per-level simulation and comparison.

use qds_core::coefficients::{
    centering_from_step_means, centering_gap, diffusion_curve, drift_zeta, explicit_centering, inadmissible_centering,
    step_means_many, CenteringCurve, CenteringKind, DiffusionCurve, DriftCurve, DEFAULT_GK_TOL,
};
use qds_core::diffusion::{compare_ensemble, ComparisonReport};
use qds_core::montecarlo::{
    coin_marginal_exact, dyadic_pairs, ensemble_moments, sample_inadmissible, sample_initial, MomentReport,
    PathEnsemble,
};
use qds_core::phase::{Density, DEFAULT_CELLS};
use qds_core::Result;
use serde::Serialize;

use crate::scenario::{CenteringSpec, Initial, Model, ObservableSpec, Scenario};

/// Dyadic levels used for the pair statistics.
pub const PAIR_LEVELS: u32 = 3;

/// Drift and diffusion coefficient on the scenario grid; computed once per run.
#[derive(Debug, Clone)]
pub struct Coefficients {
    pub drift: DriftCurve,
    pub diffusion: DiffusionCurve,
}

impl Coefficients {
    pub fn compute(model: &Model, t_grid: &[f64]) -> Result<Self> {
        let curve = &model.spec.curve;
        Ok(Self {
            drift: drift_zeta(curve, &model.observable, t_grid)?,
            diffusion: diffusion_curve(curve, &model.observable, t_grid, DEFAULT_GK_TOL)?,
        })
    }

    pub fn max_truncation(&self) -> usize {
        self.diffusion.truncation
    }

    pub fn max_tail_estimate(&self) -> f64 {
        self.diffusion.tail_estimate
    }
}

/// Everything produced at one `n`.
#[derive(Debug, Clone)]
pub struct Level {
    pub n: usize,
    pub centering: CenteringCurve,
    pub ensemble: PathEnsemble,
    pub comparison: ComparisonReport,
    pub moments: MomentReport,
    pub summary: LevelSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub n: usize,
    pub members: usize,
    pub backend: String,
    pub centering: String,
    /// `sup_t √n |c(t) − m(ζ_n(·, t))|`.
    pub admissibility_gap: f64,
    /// Median over members of `sup_t |ζ_n − ζ|`.
    pub mean_error: f64,
    pub max_ks: f64,
    pub ks_at_end: f64,
    pub max_cov_dev: f64,
    pub qv_dev: f64,
    pub max_kolmogorov_ratio: f64,
    pub ks_passed: bool,
    pub cov_passed: bool,
    pub qv_passed: bool,
    pub passed: bool,
    /// Total variation against the exact binomial law at `t = 1`, when it applies.
    pub coin_tv: Option<f64>,
}

/// Lebesgue centering and the scenario's centering at level `n`.
pub fn centerings(
    sc: &Scenario,
    model: &Model,
    coeffs: &Coefficients,
    n: usize,
    t_grid: &[f64],
) -> Result<(CenteringCurve, CenteringCurve)> {
    let f = &model.observable;
    let uniform = Density::uniform(DEFAULT_CELLS);
    let measure = match (&model.initial, sc.centering) {
        (Initial::Density { density, label }, CenteringSpec::MeasureMean) if label != "uniform" => Some(density),
        _ => None,
    };
    let mut densities = vec![&uniform];
    densities.extend(measure);
    let means = step_means_many(&model.spec, n, f, &densities)?;
    let curve = |a: &[Vec<f64>], kind: CenteringKind| -> Result<CenteringCurve> {
        CenteringCurve::new(t_grid.to_vec(), centering_from_step_means(n, a, t_grid)?, kind)
    };
    let lebesgue = curve(&means[0], CenteringKind::LebesgueMean)?;
    let chosen = match (sc.centering, &model.initial) {
        (CenteringSpec::LebesgueMean, _) => lebesgue.clone(),
        (CenteringSpec::MeasureMean, Initial::Inadmissible { k }) => inadmissible_centering(n, *k, t_grid)?,
        (CenteringSpec::MeasureMean, Initial::Density { label, .. }) => match means.get(1) {
            Some(a) => curve(a, CenteringKind::MeasureMean(label.clone()))?,
            None => CenteringCurve {
                kind: CenteringKind::MeasureMean(label.clone()),
                ..lebesgue.clone()
            },
        },
        (CenteringSpec::ExplicitZeta, _) => explicit_centering(&coeffs.drift),
        (CenteringSpec::Zero, _) => CenteringCurve::zero(t_grid, f.dim()),
    };
    Ok((lebesgue, chosen))
}

/// Samples, simulates and compares the ensemble at level `n`.
pub fn run_level(sc: &Scenario, model: &Model, coeffs: &Coefficients, n: usize) -> Result<Level> {
    let t_grid = sc.t_grid();
    let (lebesgue, centering) = centerings(sc, model, coeffs, n, &t_grid)?;
    let admissibility_gap = centering_gap(n, &centering, &lebesgue)?;
    let points = match &model.initial {
        Initial::Density { density, label } => sample_initial(density, sc.ensemble, sc.seed, label)?,
        Initial::Inadmissible { k } => sample_inadmissible(*k, sc.ensemble, sc.seed)?,
    };
    let ensemble =
        qds_core::montecarlo::simulate_ensemble(&model.spec, n, &model.observable, &points, &t_grid, &centering)?;
    let comparison = compare_ensemble(&ensemble, &coeffs.diffusion, sc.tol)?;
    let moments = ensemble_moments(&ensemble, &dyadic_pairs(&t_grid, PAIR_LEVELS))?;

    let mean_error = mean_error(&ensemble, &centering, &coeffs.drift);
    let max_kolmogorov_ratio = moments
        .pairs
        .iter()
        .filter_map(|p| p.kolmogorov_ratio.map(|r| r.value))
        .fold(0.0, f64::max);
    let last = t_grid.len() - 1;
    let root = (n as f64).sqrt();
    let coin_tv = match (&model.initial, &sc.observable) {
        (Initial::Density { label, .. }, ObservableSpec::CoinStep)
            if label == "uniform"
                && model.spec.is_doubling()
                && t_grid[last] == 1.0
                && centering.values[last][0].abs() * root < 1e-9 =>
        {
            Some(coin_marginal_exact(n)?.tv_distance(&ensemble.marginal(last, 0)))
        }
        _ => None,
    };
    let summary = LevelSummary {
        n,
        members: ensemble.members(),
        backend: ensemble.meta.backend.name().to_string(),
        centering: centering.kind.name(),
        admissibility_gap,
        mean_error,
        max_ks: comparison.max_ks(),
        ks_at_end: comparison.ks_at(t_grid[last]),
        max_cov_dev: comparison.max_cov_deviation(),
        qv_dev: comparison.qv_deviation,
        max_kolmogorov_ratio,
        ks_passed: comparison.ks_passed(),
        cov_passed: comparison.cov_passed(),
        qv_passed: comparison.qv_passed(),
        passed: comparison.passed(),
        coin_tv,
    };
    Ok(Level {
        n,
        centering,
        ensemble,
        comparison,
        moments,
        summary,
    })
}

/// Median over members of `sup_{t, i} |χ_n/√n + c(t) − ζ(t)|`, i.e. of the
/// sup-distance between `ζ_n` and the drift on the grid.
pub fn mean_error(ens: &PathEnsemble, centering: &CenteringCurve, drift: &DriftCurve) -> f64 {
    let root = (ens.n as f64).sqrt();
    let d = ens.dim;
    let mut sups: Vec<f64> = (0..ens.members())
        .map(|m| {
            let path = ens.path(m);
            let mut sup: f64 = 0.0;
            for (j, (c, z)) in centering.values.iter().zip(&drift.values).enumerate() {
                for i in 0..d {
                    sup = sup.max((path[j * d + i] / root + c[i] - z[i]).abs());
                }
            }
            sup
        })
        .collect();
    sups.sort_by(f64::total_cmp);
    let mid = sups.len() / 2;
    if sups.len() % 2 == 1 {
        sups[mid]
    } else {
        0.5 * (sups[mid - 1] + sups[mid])
    }
}

/// CSV with columns `n, t, mean, var, m4, ks, cov_dev, qv_dev`, where
/// `cov_dev` is the variance deviation at `t`. Vector observables get a
/// `component` column after `t`.
pub fn summary_csv_rows(level: &Level, header: bool) -> String {
    let d = level.ensemble.dim;
    let mut s = String::new();
    if header {
        s.push_str(if d == 1 {
            "n,t,mean,var,m4,ks,cov_dev,qv_dev\n"
        } else {
            "n,t,component,mean,var,m4,ks,cov_dev,qv_dev\n"
        });
    }
    for (j, &t) in level.ensemble.t_grid.iter().enumerate() {
        for c in 0..d {
            let m = level.moments.marginal(j, c, d);
            let ks = level.comparison.ks[j * d + c].statistic;
            let cov_dev = level
                .comparison
                .cov
                .iter()
                .find(|e| e.s == t && e.t == t && e.i == c && e.j == c)
                .map_or(f64::NAN, |e| e.deviation);
            s.push_str(&format!("{},{t:?},", level.n));
            if d > 1 {
                s.push_str(&format!("{},", c + 1));
            }
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                m.mean.value, m.variance.value, m.m4.value, ks, cov_dev, level.comparison.qv_deviation
            ));
        }
    }
    s
}
