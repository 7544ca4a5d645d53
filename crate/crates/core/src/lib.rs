//! Simulation and verification toolkit for quasistatic dynamical systems
//! driven by expanding circle maps.
//!
//! - [`phase`]: maps, curves of maps, triangular arrays, observables, densities.
//! - [`transfer`]: transfer operators, SRB densities, Ulam matrices, memory loss.
//! - [`coefficients`]: drift, diffusion coefficient and centering sequences.
//! - [`montecarlo`]: ensembles of rescaled Birkhoff sums and their moments.
//! - [`diffusion`]: the limiting Gaussian process and comparison statistics.

pub mod coefficients;
pub mod diffusion;
pub mod error;
pub mod montecarlo;
pub mod phase;
pub mod transfer;

pub use error::{QdsError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
