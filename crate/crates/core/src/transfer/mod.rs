//! Transfer operators of the circle maps and everything built on them.
//!
//! Grid functions live on the midpoints of `M` uniform cells. The discrete
//! operator sends a grid function `h` to the cell averages of `L(Ih)`, where
//! `Ih` is the periodic piecewise-linear interpolant of `h`. Cell averages of
//! `L(Ih)` are integrals of `Ih` over the branch preimages of each cell, so the
//! scheme conserves mass exactly and maps nonnegative data to nonnegative data.

mod branches;
mod frozen;
mod memory;
mod operator;
mod srb;
mod ulam;

pub use branches::{inverse_branches, invert_lift, Branch};
pub use frozen::{correlation_term, FrozenMap};
pub use memory::{fit_decay_rate, memory_loss_curve, MemoryLossReport, NOISE_FLOOR};
pub use operator::{apply_transfer, evolve_pushforward, Pushforward, TransferOperator};
pub use srb::{srb_density, srb_solve, SrbSolution, DEFAULT_MAX_ITER, DEFAULT_SRB_TOL};
pub use ulam::{ulam_matrix, UlamMatrix};
