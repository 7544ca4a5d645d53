//! The limiting diffusion `χ(t) = ∫₀ᵗ σ̂_s dW_s`: path sampling, Gaussian
//! marginals, and distributional comparison against simulated ensembles.

mod compare;
mod ks;
mod sde;

pub use compare::{compare_ensemble, ComparisonReport, CovDeviation, KsEntry, Tolerances};
pub use ks::{ks_statistic, normal_cdf};
pub use sde::{gaussian_marginal, sample_diffusion};
