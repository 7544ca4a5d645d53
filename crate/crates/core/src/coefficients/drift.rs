use rayon::prelude::*;

use super::COEFF_SRB_TOL;
use crate::error::{QdsError, Result};
use crate::phase::{CircleMap, MapCurve, Observable, DEFAULT_CELLS};
use crate::transfer::FrozenMap;

/// Quadrature intervals per curve piece for `ζ` (even, and a multiple of 4
/// so that the half-resolution Simpson check is available).
pub const DEFAULT_INTERVALS_PER_PIECE: usize = 512;

/// `ζ(t) = ∫₀ᵗ μ̂_s(f) ds` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCurve {
    pub t_grid: Vec<f64>,
    /// One `d`-vector per grid time.
    pub values: Vec<Vec<f64>>,
    /// Largest difference between full- and half-resolution Simpson integrals
    /// over a piece.
    pub richardson_gap: f64,
}

impl DriftCurve {
    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = String::from("t");
        for i in 1..=d {
            s.push_str(&format!(",zeta_{i}"));
        }
        s.push('\n');
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            s.push_str(&format!("{t:?}"));
            for x in v {
                s.push_str(&format!(",{x:e}"));
            }
            s.push('\n');
        }
        s
    }
}

fn means_for_map(map: CircleMap, f: &Observable, cells: usize) -> Result<Vec<f64>> {
    let frozen = FrozenMap::new(map, cells, COEFF_SRB_TOL)?;
    Ok(f.components().iter().map(|c| frozen.mean(c)).collect())
}

/// `μ̂_t(f)` for every component of `f`.
pub fn srb_mean(curve: &MapCurve, f: &Observable, t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&t) {
        return Err(QdsError::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    means_for_map(curve.at(t), f, DEFAULT_CELLS)
}

pub fn drift_zeta(curve: &MapCurve, f: &Observable, t_grid: &[f64]) -> Result<DriftCurve> {
    drift_zeta_with(curve, f, t_grid, DEFAULT_INTERVALS_PER_PIECE, DEFAULT_CELLS)
}

/// Composite Simpson quadrature of `μ̂_s(f)` per curve piece; no quadrature
/// interval straddles a jump. Between nodes the integrand is the quadratic
/// through the enclosing Simpson panel.
pub fn drift_zeta_with(
    curve: &MapCurve,
    f: &Observable,
    t_grid: &[f64],
    intervals: usize,
    cells: usize,
) -> Result<DriftCurve> {
    if intervals < 4 || intervals % 4 != 0 {
        return Err(QdsError::InvalidArgument(format!(
            "quadrature intervals per piece must be a positive multiple of 4, got {intervals}"
        )));
    }
    check_grid(t_grid)?;
    let d = f.dim();
    let mut piece_nodes: Vec<Vec<Vec<f64>>> = Vec::new();
    for piece in curve.pieces() {
        let (a, b) = (piece.start, piece.end);
        let last_piece = b >= 1.0;
        let vals: Result<Vec<Vec<f64>>> = (0..=intervals)
            .into_par_iter()
            .map(|i| {
                let s = a + (b - a) * i as f64 / intervals as f64;
                let map = if i == intervals && !last_piece {
                    curve.left_limit(b)
                } else {
                    curve.at(s)
                };
                means_for_map(map, f, cells)
            })
            .collect();
        piece_nodes.push(vals?);
    }

    let mut richardson_gap: f64 = 0.0;
    let mut piece_totals = Vec::new();
    for (piece, nodes) in curve.pieces().iter().zip(&piece_nodes) {
        let h = (piece.end - piece.start) / intervals as f64;
        let fine = simpson(nodes, 1, h, d);
        let coarse = simpson(nodes, 2, 2.0 * h, d);
        for c in 0..d {
            richardson_gap = richardson_gap.max((fine[c] - coarse[c]).abs());
        }
        piece_totals.push(fine);
    }

    let mut values = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let idx = curve.piece_index(t);
        let mut acc = vec![0.0; d];
        for total in &piece_totals[..idx] {
            acc.iter_mut().zip(total).for_each(|(a, v)| *a += v);
        }
        let piece = &curve.pieces()[idx];
        let h = (piece.end - piece.start) / intervals as f64;
        let partial = partial_integral(&piece_nodes[idx], h, (t - piece.start) / h, d);
        acc.iter_mut().zip(&partial).for_each(|(a, v)| *a += v);
        values.push(acc);
    }
    Ok(DriftCurve {
        t_grid: t_grid.to_vec(),
        values,
        richardson_gap,
    })
}

pub(crate) fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(QdsError::GridMismatch("time grid must be sorted inside [0, 1]".into()));
    }
    Ok(())
}

/// Simpson integral over all nodes taken with the given stride.
fn simpson(nodes: &[Vec<f64>], stride: usize, h: f64, d: usize) -> Vec<f64> {
    let pts: Vec<&Vec<f64>> = nodes.iter().step_by(stride).collect();
    let mut out = vec![0.0; d];
    for p in (0..pts.len() - 1).step_by(2) {
        for c in 0..d {
            out[c] += h / 3.0 * (pts[p][c] + 4.0 * pts[p + 1][c] + pts[p + 2][c]);
        }
    }
    out
}

/// `∫` from the first node to fractional node position `s`.
fn partial_integral(nodes: &[Vec<f64>], h: f64, s: f64, d: usize) -> Vec<f64> {
    let intervals = nodes.len() - 1;
    let s = s.clamp(0.0, intervals as f64);
    let mut panel = ((s / 2.0).floor() as usize) * 2;
    if panel >= intervals {
        panel = intervals - 2;
    }
    let mut out = vec![0.0; d];
    for p in (0..panel).step_by(2) {
        for c in 0..d {
            out[c] += h / 3.0 * (nodes[p][c] + 4.0 * nodes[p + 1][c] + nodes[p + 2][c]);
        }
    }
    let u = s - panel as f64;
    let (u2, u3) = (u * u, u * u * u);
    let w0 = (u3 / 3.0 - 1.5 * u2 + 2.0 * u) / 2.0;
    let w1 = -(u3 / 3.0 - u2);
    let w2 = (u3 / 3.0 - 0.5 * u2) / 2.0;
    for c in 0..d {
        out[c] += h * (w0 * nodes[panel][c] + w1 * nodes[panel + 1][c] + w2 * nodes[panel + 2][c]);
    }
    out
}
