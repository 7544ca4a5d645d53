use super::operator::TransferOperator;
use crate::error::{QdsError, Result};
use crate::phase::density::grid_integral;
use crate::phase::{CircleMap, Density, DEFAULT_CELLS};

pub const DEFAULT_SRB_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SrbSolution {
    pub density: Density,
    /// `‖L ρ − ρ‖_∞` of the returned density.
    pub residual: f64,
    pub iterations: usize,
}

/// Power iteration `h ← L h` from `h ≡ 1` until the sup-norm residual drops below `tol`.
pub fn srb_solve(op: &TransferOperator, tol: f64, max_iter: usize) -> Result<SrbSolution> {
    if !(tol > 0.0) {
        return Err(QdsError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let m = op.cells();
    let mut h = vec![1.0; m];
    let mut next = vec![0.0; m];
    let mut residual = f64::INFINITY;
    for iteration in 0..=max_iter {
        op.apply_into(&h, &mut next);
        residual = h.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if residual < tol {
            return Ok(SrbSolution {
                density: Density::from_values(h)?,
                residual,
                iterations: iteration,
            });
        }
        let mass = grid_integral(&next);
        next.iter_mut().for_each(|v| *v /= mass);
        std::mem::swap(&mut h, &mut next);
    }
    Err(QdsError::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Invariant (SRB) density of `map` on the default grid.
pub fn srb_density(map: &CircleMap, tol: f64, max_iter: usize) -> Result<Density> {
    let op = TransferOperator::new(map, DEFAULT_CELLS)?;
    Ok(srb_solve(&op, tol, max_iter)?.density)
}
