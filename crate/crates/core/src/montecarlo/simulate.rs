use rand::RngCore;
use rayon::prelude::*;

use super::ensemble::{Backend, EnsembleMeta, PathEnsemble};
use super::sampling::{member_rng, tail_seed, InitialPoints};
use crate::coefficients::{split_time, CenteringCurve};
use crate::error::{QdsError, Result};
use crate::phase::{ArraySpec, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    /// Bit shift when every map of the array is the doubling map, float otherwise.
    Auto,
    Float,
}

/// Iterates every initial point along row `n` and records
/// `χ_n(x, t) = √n (S_n(x, t)/n − c(t))` on `t_grid`.
pub fn simulate_ensemble(
    spec: &ArraySpec,
    n: usize,
    f: &Observable,
    points: &InitialPoints,
    t_grid: &[f64],
    centering: &CenteringCurve,
) -> Result<PathEnsemble> {
    simulate_ensemble_with(spec, n, f, points, t_grid, centering, BackendChoice::Auto)
}

pub fn simulate_ensemble_with(
    spec: &ArraySpec,
    n: usize,
    f: &Observable,
    points: &InitialPoints,
    t_grid: &[f64],
    centering: &CenteringCurve,
    choice: BackendChoice,
) -> Result<PathEnsemble> {
    if n == 0 {
        return Err(QdsError::InvalidArgument("n must be at least 1".into()));
    }
    if points.is_empty() {
        return Err(QdsError::InvalidArgument("no initial points".into()));
    }
    if centering.t_grid != t_grid {
        return Err(QdsError::GridMismatch(
            "centering is not defined on the simulation grid".into(),
        ));
    }
    if centering.dim() != f.dim() {
        return Err(QdsError::GridMismatch(format!(
            "centering has dimension {} but the observable has {}",
            centering.dim(),
            f.dim()
        )));
    }
    if t_grid.is_empty() || t_grid.iter().any(|t| !(0.0..=1.0).contains(t)) || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(QdsError::GridMismatch("time grid must be sorted inside [0, 1]".into()));
    }

    let backend = match choice {
        BackendChoice::Auto if spec.is_doubling() => Backend::BitShift,
        _ => Backend::Float,
    };
    let d = f.dim();
    let plan: Vec<(usize, f64)> = t_grid.iter().map(|&t| split_time(n, t)).collect();
    let root_n = (n as f64).sqrt();
    let offsets: Vec<f64> = centering.values.iter().flatten().map(|c| root_n * c).collect();
    let width = t_grid.len() * d;
    let mut values = vec![0.0; points.len() * width];

    match backend {
        Backend::Float | Backend::Diffusion => {
            let row = spec.row(n)?;
            values.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
                let mut x = points.points[i];
                let orbit = |k: usize| {
                    if k > 0 {
                        x = row[k - 1].apply(x);
                    }
                    x
                };
                accumulate(f, &plan, orbit, root_n, &offsets, out);
            });
        }
        Backend::BitShift => {
            values.par_chunks_mut(width).enumerate().for_each(|(i, out)| {
                let bits = member_bits(points, i, n);
                accumulate(f, &plan, |k| bit_window(&bits, k), root_n, &offsets, out);
            });
        }
    }

    PathEnsemble::new(
        n,
        t_grid.to_vec(),
        d,
        centering.kind.clone(),
        EnsembleMeta {
            seed: points.seed,
            initial: points.label.clone(),
            observable: f.label().to_string(),
            backend,
        },
        values,
    )
}

/// One pass over `k = 0, 1, …`; `orbit` is called with consecutive `k` and
/// returns `x_{n,k}`.
fn accumulate(
    f: &Observable,
    plan: &[(usize, f64)],
    mut orbit: impl FnMut(usize) -> f64,
    root_n: f64,
    offsets: &[f64],
    out: &mut [f64],
) {
    let d = f.dim();
    let mut sum = vec![0.0; d];
    let mut fx = vec![0.0; d];
    let mut next = 0;
    let mut k = 0;
    while next < plan.len() {
        f.eval_into(orbit(k), &mut fx);
        while next < plan.len() && plan[next].0 == k {
            let frac = plan[next].1;
            for c in 0..d {
                let s = sum[c] + frac * fx[c];
                out[next * d + c] = s / root_n - offsets[next * d + c];
            }
            next += 1;
        }
        for c in 0..d {
            sum[c] += fx[c];
        }
        k += 1;
    }
}

/// Binary digits of member `i`, most significant first: the sampled point's
/// leading 52 bits (or its zero prefix) followed by fresh random bits.
fn member_bits(points: &InitialPoints, i: usize, n: usize) -> Vec<u64> {
    let words = (n + 64) / 64 + 2;
    let mut rng = member_rng(tail_seed(points.seed), i);
    let mut bits: Vec<u64> = (0..words).map(|_| rng.next_u64()).collect();
    let prefix = points.zero_prefix[i];
    if prefix == 0 {
        let top = (points.points[i] * (1u64 << 52) as f64) as u64;
        bits[0] = (top << 12) | (bits[0] & 0xFFF);
    } else {
        let zeros = prefix.min((words * 64) as u64) as usize;
        for w in bits.iter_mut().take(zeros / 64) {
            *w = 0;
        }
        let r = zeros % 64;
        if r > 0 {
            bits[zeros / 64] &= u64::MAX >> r;
        }
    }
    bits
}

/// `x_k`: the 53 binary digits starting at position `k`.
#[inline]
fn bit_window(bits: &[u64], k: usize) -> f64 {
    let (q, r) = (k / 64, k % 64);
    let hi = if r == 0 {
        bits[q]
    } else {
        (bits[q] << r) | (bits[q + 1] >> (64 - r))
    };
    (hi >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
