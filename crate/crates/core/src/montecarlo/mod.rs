//! Ensembles of rescaled Birkhoff sums: sampling initial conditions,
//! iterating rows of the array, and moment statistics.

mod coin;
mod ensemble;
mod moments;
mod sampling;
mod simulate;

pub use coin::{coin_marginal_exact, CoinTable};
pub use ensemble::{Backend, EnsembleMeta, PathEnsemble};
pub use moments::{dyadic_pairs, ensemble_moments, Estimate, MarginalMoments, MomentReport, PairMoments, MIN_ENSEMBLE};
pub(crate) use sampling::member_rng;
pub use sampling::{sample_inadmissible, sample_initial, InitialPoints};
pub use simulate::{simulate_ensemble, simulate_ensemble_with, BackendChoice};

/// Uniform time grid with `points` nodes on `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![1.0],
        _ => (0..points).map(|i| i as f64 / (points - 1) as f64).collect(),
    }
}
