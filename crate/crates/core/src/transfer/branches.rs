use crate::error::{QdsError, Result};
use crate::phase::CircleMap;

/// One preimage `y` of a point together with `T′(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub point: f64,
    pub deriv: f64,
}

const MAX_STEPS: usize = 200;

/// Solves `lift(y) = v` for the monotone lift.
///
/// The root is bracketed by `(v ± A)/d` with `A = Σ|a_j|`; Newton steps that
/// leave the bracket fall back to bisection.
pub fn invert_lift(map: &CircleMap, v: f64, guess: f64) -> Result<f64> {
    let d = map.degree() as f64;
    let a = map.perturbation_bound();
    if a == 0.0 {
        return Ok(v / d);
    }
    let mut lo = (v - a) / d;
    let mut hi = (v + a) / d;
    let mut y = if guess > lo && guess < hi { guess } else { v / d };
    for _ in 0..MAX_STEPS {
        let (l, dl) = map.lift_and_deriv(y);
        let r = l - v;
        if r == 0.0 {
            return Ok(y);
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let mut next = if dl > 0.0 { y - r / dl } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 2e-16 * y.abs().max(1.0) || hi - lo <= 1e-15 {
            return Ok(next);
        }
        y = next;
    }
    Err(QdsError::RootSolve { target: v })
}

/// All `degree` preimages of `x`, ordered by branch.
pub fn inverse_branches(map: &CircleMap, x: f64) -> Result<Vec<Branch>> {
    let d = map.degree();
    (0..d)
        .map(|b| {
            let v = x + b as f64;
            let y = invert_lift(map, v, v / d as f64)?;
            let deriv = map.deriv(y);
            if !(deriv > 0.0) {
                return Err(QdsError::RootSolve { target: v });
            }
            Ok(Branch { point: y, deriv })
        })
        .collect()
}
