use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::coefficients::{sigma_sqrt, CenteringKind, DiffusionCurve};
use crate::error::{QdsError, Result};
use crate::montecarlo::{member_rng, uniform_grid, Backend, EnsembleMeta, PathEnsemble};

/// Covariance of `χ(t)`: `[χ]_t = ∫₀ᵗ σ̂²_s ds`.
pub fn gaussian_marginal(sig: &DiffusionCurve, t: f64) -> DMatrix<f64> {
    sig.quadratic_variation(t.clamp(0.0, 1.0))
}

/// Euler–Maruyama paths on the grid `k / steps`. Each increment is
/// `A_k √Δt Z_k` with `A_k` the square root of the step average of `σ̂²`,
/// which is `σ̂_{t_k}` wherever `σ̂` is constant over the step.
pub fn sample_diffusion(sig: &DiffusionCurve, steps: usize, count: usize, seed: u64) -> Result<PathEnsemble> {
    if steps == 0 || count == 0 {
        return Err(QdsError::InvalidArgument("steps and count must be at least 1".into()));
    }
    let grid = uniform_grid(steps + 1);
    let d = sig.dim();
    let dt = 1.0 / steps as f64;
    let qv: Vec<DMatrix<f64>> = grid.iter().map(|&t| gaussian_marginal(sig, t)).collect();
    let roots: Vec<DMatrix<f64>> = qv
        .windows(2)
        .map(|w| sigma_sqrt(&((&w[1] - &w[0]) / dt)).map(|a| a * dt.sqrt()))
        .collect::<Result<_>>()?;
    let width = grid.len() * d;
    let mut values = vec![0.0; count * width];
    values.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
        let mut rng = member_rng(seed, i);
        let mut x = DVector::<f64>::zeros(d);
        for (k, a) in roots.iter().enumerate() {
            let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
            x += a * z;
            out[(k + 1) * d..(k + 2) * d].copy_from_slice(x.as_slice());
        }
    });
    PathEnsemble::new(
        steps,
        grid,
        d,
        CenteringKind::Zero,
        EnsembleMeta {
            seed,
            initial: "none".into(),
            observable: "diffusion".into(),
            backend: Backend::Diffusion,
        },
        values,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    fn step_curve() -> DiffusionCurve {
        DiffusionCurve::new(
            vec![0.0, 0.5, 0.5, 1.0],
            vec![scalar(1.0), scalar(1.0), scalar(4.0), scalar(4.0)],
        )
        .unwrap()
    }

    #[test]
    fn marginal_variances() {
        let c = step_curve();
        assert_eq!(gaussian_marginal(&c, 0.0)[(0, 0)], 0.0);
        assert!((gaussian_marginal(&c, 0.75)[(0, 0)] - 1.5).abs() < 1e-14);
        assert!((gaussian_marginal(&c, 1.0)[(0, 0)] - 2.5).abs() < 1e-14);
        let bm = DiffusionCurve::constant(scalar(1.0));
        assert!((gaussian_marginal(&bm, 0.3)[(0, 0)] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn zero_coefficient_paths_vanish() {
        let e = sample_diffusion(&DiffusionCurve::constant(scalar(0.0)), 8, 10, 1).unwrap();
        assert!(e.raw_values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn variances_match_marginals() {
        let count = 40_000;
        for (curve, want) in [(DiffusionCurve::constant(scalar(1.0)), 1.0), (step_curve(), 2.5)] {
            let e = sample_diffusion(&curve, 16, count, 3).unwrap();
            assert!(e.raw_values().iter().step_by(17).all(|&v| v == 0.0));
            let last = e.marginal(16, 0);
            let var = last.iter().map(|v| v * v).sum::<f64>() / count as f64;
            assert!(
                (var - want).abs() < 4.0 * want * (2.0 / count as f64).sqrt(),
                "{var} vs {want}"
            );
        }
    }

    #[test]
    fn matrix_coefficient() {
        let s2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let e = sample_diffusion(&DiffusionCurve::constant(s2), 4, 40_000, 9).unwrap();
        let (a, b) = (e.marginal(4, 0), e.marginal(4, 1));
        let cov = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64;
        assert!((cov - 0.6).abs() < 0.04);
        assert_eq!(e.dim, 2);
    }
}
