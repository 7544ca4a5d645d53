use std::f64::consts::TAU;

use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use qds_core::coefficients::{
    drift_zeta, lebesgue_centering, sigma2_for_map, srb_mean, CenteringCurve, DiffusionCurve, DEFAULT_GK_TOL,
};
use qds_core::diffusion::sample_diffusion;
use qds_core::montecarlo::{sample_initial, simulate_ensemble, uniform_grid};
use qds_core::phase::{ArraySpec, CircleMap, Density, MapCurve, ModelParams, Observable, Polynomial, SineTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sine_map(amp: f64) -> CircleMap {
    CircleMap::new(2, [SineTerm { freq: 1, amp }]).unwrap()
}

/// Birkhoff average of `cos 2πx` along many orbits of `x ↦ 2x + a sin 2πx`.
fn birkhoff_cos_mean(amp: f64, starts: usize, steps: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0.0;
    for _ in 0..starts {
        let mut x: f64 = rng.random();
        for _ in 0..100 {
            let y = 2.0 * x + amp * (TAU * x).sin();
            x = y - y.floor();
        }
        for _ in 0..steps {
            total += (TAU * x).cos();
            let y = 2.0 * x + amp * (TAU * x).sin();
            x = y - y.floor();
        }
    }
    total / (starts * steps) as f64
}

#[test]
fn srb_mean_matches_orbit_averages() {
    let curve = MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), 1.0, ModelParams::default()).unwrap();
    for t in [0.5, 1.0] {
        let exact = srb_mean(&curve, &Observable::cos(1), t).unwrap()[0];
        let orbit = birkhoff_cos_mean(0.1 * t, 2000, 5000);
        assert!((exact - orbit).abs() < 2e-3, "t = {t}: {exact} vs {orbit}");
    }
}

#[test]
fn green_kubo_converges_at_second_order_in_the_grid() {
    for amp in [0.05, 0.1] {
        let v: Vec<f64> = [2048, 4096, 8192]
            .iter()
            .map(|&cells| {
                sigma2_for_map(&sine_map(amp), &Observable::cos(1), DEFAULT_GK_TOL, cells)
                    .unwrap()
                    .scalar()
            })
            .collect();
        let ratio = (v[0] - v[1]) / (v[1] - v[2]);
        assert!((3.5..4.5).contains(&ratio), "amp {amp}: ratio {ratio}");
        let extrapolated = v[2] + (v[2] - v[1]) / 3.0;
        assert!((v[1] - extrapolated).abs() < 1e-6, "amp {amp}");
    }
}

/// Trapezoid rule for `∫₀¹ μ̂_s(cos 2πx) ds` on `intervals` panels.
fn trapezoid_zeta(curve: &MapCurve, intervals: usize) -> f64 {
    let h = 1.0 / intervals as f64;
    let f = |k: usize| srb_mean(curve, &Observable::cos(1), k as f64 * h).unwrap()[0];
    let inner: f64 = (1..intervals).map(f).sum();
    h * (0.5 * (f(0) + f(intervals)) + inner)
}

#[test]
fn drift_matches_extrapolated_trapezoid() {
    let curve = MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), 1.0, ModelParams::default()).unwrap();
    let zeta = drift_zeta(&curve, &Observable::cos(1), &[0.0, 0.5, 1.0]).unwrap();
    assert!(zeta.richardson_gap < 1e-8, "{}", zeta.richardson_gap);
    let (coarse, fine) = (trapezoid_zeta(&curve, 128), trapezoid_zeta(&curve, 256));
    let limit = fine + (fine - coarse) / 3.0;
    assert!(
        (zeta.values[2][0] - limit).abs() < 1e-8,
        "{} vs {limit}",
        zeta.values[2][0]
    );
    assert_eq!(zeta.values[0][0], 0.0);
}

#[test]
fn doubling_cos_has_no_correlations() {
    let s = sigma2_for_map(&CircleMap::doubling(), &Observable::cos(3), DEFAULT_GK_TOL, 4096).unwrap();
    assert_abs_diff_eq!(s.scalar(), 0.5, epsilon = 1e-12);
}

#[test]
fn ensembles_do_not_depend_on_thread_count() {
    let curve = MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), 1.0, ModelParams::default()).unwrap();
    let spec = ArraySpec::on_curve(curve);
    let f = Observable::cos_sin(1);
    let grid = uniform_grid(9);
    let c = lebesgue_centering(&spec, 256, &f, &grid).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                let pts = sample_initial(&Density::uniform(1024), 500, 11, "uniform").unwrap();
                simulate_ensemble(&spec, 256, &f, &pts, &grid, &c).unwrap()
            })
    };
    let one = run(1);
    assert_eq!(one.raw_values(), run(3).raw_values());
    assert_eq!(one.to_binary(), run(2).to_binary());
}

#[test]
fn lebesgue_centering_vanishes_for_the_doubling_map() {
    let spec = ArraySpec::on_curve(MapCurve::doubling());
    let grid = uniform_grid(5);
    let c = lebesgue_centering(&spec, 64, &Observable::cos(1), &grid).unwrap();
    assert!(c.values.iter().all(|v| v[0].abs() < 1e-12));
    let zero = CenteringCurve::zero(&grid, 1);
    assert_eq!(zero.values.len(), grid.len());
}

#[test]
fn diffusion_paths_have_the_target_covariance() {
    let sig = DiffusionCurve::new(
        vec![0.0, 0.5, 0.5, 1.0],
        vec![
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]),
        ],
    )
    .unwrap();
    let ens = sample_diffusion(&sig, 16, 40_000, 3).unwrap();
    assert_eq!(ens, sample_diffusion(&sig, 16, 40_000, 3).unwrap());
    let last = ens.t_grid.len() - 1;
    let half = last / 2;
    let qv = sig.quadratic_variation(1.0);
    assert_abs_diff_eq!(qv[(0, 0)], 1.5, epsilon = 1e-12);
    let cols: Vec<Vec<f64>> = (0..2).map(|c| ens.marginal(last, c)).collect();
    let m = cols[0].len() as f64;
    for i in 0..2 {
        for j in 0..2 {
            let cov = cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>() / m;
            assert!((cov - qv[(i, j)]).abs() < 0.05, "({i}, {j}): {cov} vs {}", qv[(i, j)]);
        }
    }
    // increments after the switch are independent of the path at t = 1/2
    let early = ens.marginal(half, 0);
    let cross = early.iter().zip(&cols[0]).map(|(a, b)| a * (b - a)).sum::<f64>() / m;
    assert!(cross.abs() < 0.03, "{cross}");
    assert!(ens.marginal(0, 0).iter().all(|&v| v == 0.0));
}
