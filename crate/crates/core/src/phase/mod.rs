//! State space, the expanding map class, curves of maps, triangular arrays,
//! observables and densities.
//!
//! Points of the circle are represented by their coordinate in `[0, 1)`.
//! Maps are lifts of the form `T(x) = d·x + Σ a_j sin(2π j x)` reduced mod 1,
//! which always fix the origin and are degree-`d` coverings.

mod array;
mod curve;
pub(crate) mod density;
mod extrema;
mod observable;

pub use array::{ArrayMode, ArraySpec, PERTURBATION_FREQUENCY};
pub use curve::{holder_constant, CurvePiece, MapCurve, Polynomial};
pub use density::{Density, DlCertificate, DEFAULT_CELLS};
pub use extrema::{golden_max, sup_on_circle};
pub use observable::{Component, Observable, StepFunction, TrigPolynomial};

use std::f64::consts::TAU;

use crate::error::{QdsError, Result};

/// Reduce a real number to the circle coordinate in `[0, 1)`.
#[inline]
pub fn wrap(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Length of the shorter arc between two circle points.
#[inline]
pub fn circle_distance(x: f64, y: f64) -> f64 {
    let d = wrap(x - y);
    d.min(1.0 - d)
}

/// Expansion floor and second-derivative cap defining the admissible map class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub lambda_min: f64,
    pub second_deriv_cap: f64,
}

impl ModelParams {
    pub fn new(lambda_min: f64, second_deriv_cap: f64) -> Result<Self> {
        if !(lambda_min > 1.0) || !lambda_min.is_finite() {
            return Err(QdsError::InvalidParams(format!(
                "expansion floor must exceed 1, got {lambda_min}"
            )));
        }
        if !(second_deriv_cap >= 0.0) {
            return Err(QdsError::InvalidParams(format!(
                "second derivative cap must be nonnegative, got {second_deriv_cap}"
            )));
        }
        Ok(Self {
            lambda_min,
            second_deriv_cap,
        })
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            lambda_min: 1.2,
            second_deriv_cap: 50.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTerm {
    pub freq: u32,
    pub amp: f64,
}

/// Value, derivative and second derivative of a map at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapEval {
    pub image: f64,
    pub deriv: f64,
    pub second: f64,
}

/// A C² expanding circle map `x ↦ d·x + Σ a_j sin(2π j x) mod 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMap {
    degree: u32,
    terms: Vec<SineTerm>,
}

impl CircleMap {
    /// Builds a map, merging repeated frequencies and dropping zero amplitudes.
    /// Only the algebraic shape is validated here; see [`CircleMap::check`].
    pub fn new(degree: u32, terms: impl IntoIterator<Item = SineTerm>) -> Result<Self> {
        if degree < 2 {
            return Err(QdsError::BoundViolation(format!(
                "degree must be at least 2, got {degree}"
            )));
        }
        let mut merged: Vec<SineTerm> = Vec::new();
        for term in terms {
            if term.freq == 0 {
                return Err(QdsError::BoundViolation("sine frequency must be >= 1".into()));
            }
            if !term.amp.is_finite() {
                return Err(QdsError::BoundViolation("non-finite amplitude".into()));
            }
            match merged.iter_mut().find(|t| t.freq == term.freq) {
                Some(existing) => existing.amp += term.amp,
                None => merged.push(term),
            }
        }
        merged.retain(|t| t.amp != 0.0);
        merged.sort_by_key(|t| t.freq);
        Ok(Self { degree, terms: merged })
    }

    /// Builds a map and verifies it belongs to the class fixed by `params`.
    pub fn checked(degree: u32, terms: impl IntoIterator<Item = SineTerm>, params: &ModelParams) -> Result<Self> {
        let map = Self::new(degree, terms)?;
        map.check(params)?;
        Ok(map)
    }

    pub fn doubling() -> Self {
        Self {
            degree: 2,
            terms: Vec::new(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn terms(&self) -> &[SineTerm] {
        &self.terms
    }

    /// True when the map is exactly `x ↦ d·x` with no perturbation.
    pub fn is_linear(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_doubling(&self) -> bool {
        self.degree == 2 && self.terms.is_empty()
    }

    /// Sum of absolute amplitudes; bounds `|lift(x) - d·x|`.
    pub fn perturbation_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.abs()).sum()
    }

    #[inline]
    pub fn lift(&self, x: f64) -> f64 {
        let mut y = self.degree as f64 * x;
        for t in &self.terms {
            y += t.amp * (TAU * t.freq as f64 * x).sin();
        }
        y
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        let mut y = self.degree as f64;
        for t in &self.terms {
            let w = TAU * t.freq as f64;
            y += t.amp * w * (w * x).cos();
        }
        y
    }

    #[inline]
    pub fn second_deriv(&self, x: f64) -> f64 {
        let mut y = 0.0;
        for t in &self.terms {
            let w = TAU * t.freq as f64;
            y -= t.amp * w * w * (w * x).sin();
        }
        y
    }

    /// Lift value and derivative together.
    #[inline]
    pub fn lift_and_deriv(&self, x: f64) -> (f64, f64) {
        let mut y = self.degree as f64 * x;
        let mut dy = self.degree as f64;
        for t in &self.terms {
            let w = TAU * t.freq as f64;
            let (s, c) = (w * x).sin_cos();
            y += t.amp * s;
            dy += t.amp * w * c;
        }
        (y, dy)
    }

    /// Image of a circle point.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        wrap(self.lift(x))
    }

    pub fn eval(&self, x: f64) -> MapEval {
        MapEval {
            image: self.apply(x),
            deriv: self.deriv(x),
            second: self.second_deriv(x),
        }
    }

    fn scan_points(&self) -> usize {
        let max_freq = self.terms.iter().map(|t| t.freq).max().unwrap_or(1) as usize;
        (64 * max_freq).max(256)
    }

    /// Grid-refined infimum of `T′`.
    pub fn min_deriv(&self) -> f64 {
        if self.terms.is_empty() {
            return self.degree as f64;
        }
        -sup_on_circle(|x| -self.deriv(x), self.scan_points())
    }

    /// Grid-refined supremum of `|T″|`.
    pub fn max_abs_second_deriv(&self) -> f64 {
        if self.terms.is_empty() {
            return 0.0;
        }
        sup_on_circle(|x| self.second_deriv(x).abs(), self.scan_points())
    }

    pub fn check(&self, params: &ModelParams) -> Result<()> {
        let min_d = self.min_deriv();
        if min_d < params.lambda_min {
            return Err(QdsError::BoundViolation(format!(
                "inf T' = {min_d:.6} below expansion floor {}",
                params.lambda_min
            )));
        }
        let max_dd = self.max_abs_second_deriv();
        if max_dd > params.second_deriv_cap {
            return Err(QdsError::BoundViolation(format!(
                "sup |T''| = {max_dd:.6} above cap {}",
                params.second_deriv_cap
            )));
        }
        Ok(())
    }

    /// Map with an extra sine term added.
    pub fn with_term(&self, term: SineTerm) -> Result<Self> {
        Self::new(self.degree, self.terms.iter().copied().chain(std::iter::once(term)))
    }
}

/// Evaluates `(T x, T′ x, T″ x)`.
pub fn map_eval(map: &CircleMap, x: f64) -> MapEval {
    map.eval(x)
}

/// The `C¹` distance `sup d(T₁x, T₂x) + sup |T₁′ − T₂′|`; `+∞` across degrees.
pub fn dc1_distance(a: &CircleMap, b: &CircleMap) -> f64 {
    if a.degree != b.degree {
        return f64::INFINITY;
    }
    if a.terms == b.terms {
        return 0.0;
    }
    // evaluate in a canonical order so the result is exactly symmetric
    let key = |m: &CircleMap| m.terms.iter().map(|t| (t.freq, t.amp.to_bits())).collect::<Vec<_>>();
    let (a, b) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    let scan = a.scan_points().max(b.scan_points());
    let position = sup_on_circle(|x| circle_distance(a.lift(x), b.lift(x)), scan);
    let slope = sup_on_circle(|x| (a.deriv(x) - b.deriv(x)).abs(), scan);
    position + slope
}
