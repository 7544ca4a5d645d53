use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coefficients::inadmissible_epsilon;
use crate::error::{QdsError, Result};
use crate::phase::Density;

/// Member `i` of a seeded ensemble draws from its own stream.
pub(crate) fn member_rng(seed: u64, member: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Seed for the stream that supplies binary digits beyond the sampled ones.
pub(crate) fn tail_seed(seed: u64) -> u64 {
    seed ^ 0x5DEE_CE66_D1CE_B00C
}

/// Sampled initial conditions.
///
/// `zero_prefix[i]` is the number of leading binary digits of point `i`
/// known to be zero (0 for an ordinary sample); the digits after that are
/// uniform. The exact bit-shift backend uses it; the floating backend only
/// sees `points`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPoints {
    pub points: Vec<f64>,
    pub zero_prefix: Vec<u64>,
    pub seed: u64,
    pub label: String,
}

impl InitialPoints {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points given explicitly; extra digits for the bit-shift backend come from `seed`.
    pub fn explicit(points: Vec<f64>, seed: u64) -> Result<Self> {
        if points.iter().any(|x| !(0.0..1.0).contains(x)) {
            return Err(QdsError::InvalidArgument("points must lie in [0, 1)".into()));
        }
        Ok(Self {
            zero_prefix: vec![0; points.len()],
            points,
            seed,
            label: "explicit".into(),
        })
    }
}

/// Inverse-CDF sample from a cell density; the CDF is piecewise linear.
pub(crate) fn invert_cdf(cdf: &[f64], values: &[f64], u: f64) -> f64 {
    let m = values.len();
    let target = u * cdf[m];
    let i = (cdf.partition_point(|&c| c <= target).max(1) - 1).min(m - 1);
    let within = if values[i] > 0.0 {
        ((target - cdf[i]) / values[i]).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let x = (i as f64 + within) / m as f64;
    if x >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        x
    }
}

pub(crate) fn cumulative(values: &[f64]) -> Vec<f64> {
    let mut cdf = Vec::with_capacity(values.len() + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for v in values {
        acc += v;
        cdf.push(acc);
    }
    cdf
}

/// `count` independent draws from `rho`, reproducible from `seed`.
pub fn sample_initial(rho: &Density, count: usize, seed: u64, label: &str) -> Result<InitialPoints> {
    if count == 0 {
        return Err(QdsError::InvalidArgument("sample count must be at least 1".into()));
    }
    let values = rho.values();
    let cdf = cumulative(values);
    let points: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let u: f64 = member_rng(seed, i).random();
            invert_cdf(&cdf, values, u)
        })
        .collect();
    Ok(InitialPoints {
        zero_prefix: vec![0; count],
        points,
        seed,
        label: label.to_string(),
    })
}

/// Draws from `(1 − ε)·m + Σ_{j≥K} j⁻² ν_j` with `ν_j` uniform on
/// `[0, 2^{−2^j})`. Components with `2^j ≥ 2^64` all saturate the prefix.
pub fn sample_inadmissible(k: u64, count: usize, seed: u64) -> Result<InitialPoints> {
    let eps = inadmissible_epsilon(k)?;
    if count == 0 {
        return Err(QdsError::InvalidArgument("sample count must be at least 1".into()));
    }
    let drawn: Vec<(f64, u64)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = member_rng(seed, i);
            let pick: f64 = rng.random();
            let u: f64 = rng.random();
            if pick >= eps {
                return (u, 0);
            }
            // component j with probability j⁻² / ε
            let mut rest = pick;
            let mut j = k;
            while j < 64 {
                let w = 1.0 / (j as f64 * j as f64);
                if rest < w {
                    break;
                }
                rest -= w;
                j += 1;
            }
            if j >= 64 {
                return (0.0, u64::MAX);
            }
            let prefix = 1u64 << j;
            let x = if prefix >= 1100 {
                0.0
            } else {
                u * 2f64.powi(-(prefix as i32))
            };
            (x, prefix)
        })
        .collect();
    Ok(InitialPoints {
        points: drawn.iter().map(|d| d.0).collect(),
        zero_prefix: drawn.iter().map(|d| d.1).collect(),
        seed,
        label: format!("inadmissible(K={k})"),
    })
}
