//! Scenario-driven batch runs: configuration, coefficient computation,
//! ensemble simulation, comparison against the limit process and the
//! resulting CSV/JSON artifacts.

pub mod app;
pub mod config;
pub mod fit;
pub mod runner;
pub mod scenario;

pub use app::{load_scenario, CliError};
pub use scenario::Scenario;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "QDSLAB_WORKERS";
