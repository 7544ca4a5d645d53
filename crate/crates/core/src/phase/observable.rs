use std::f64::consts::TAU;

use crate::error::{QdsError, Result};

/// `c + Σ a_j cos(2π j x) + Σ b_j sin(2π j x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigPolynomial {
    pub constant: f64,
    pub cos: Vec<(u32, f64)>,
    pub sin: Vec<(u32, f64)>,
}

impl TrigPolynomial {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = self.constant;
        for &(j, a) in &self.cos {
            v += a * (TAU * j as f64 * x).cos();
        }
        for &(j, b) in &self.sin {
            v += b * (TAU * j as f64 * x).sin();
        }
        v
    }

    /// `Σ 2π j (|a_j| + |b_j|)`, an upper bound for `sup |f′|`.
    pub fn lipschitz_constant(&self) -> f64 {
        self.cos
            .iter()
            .chain(&self.sin)
            .map(|&(j, a)| TAU * j as f64 * a.abs())
            .sum()
    }

    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.cos.iter().chain(&self.sin).map(|&(_, a)| a.abs()).sum::<f64>()
    }
}

/// Piecewise-constant function: `values[i]` on `[breaks[i-1], breaks[i])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(QdsError::InvalidObservable(
                "step function needs one more value than break points".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(QdsError::InvalidObservable(
                "break points must be strictly increasing inside (0, 1)".into(),
            ));
        }
        Ok(Self { breaks, values })
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.values[self.breaks.partition_point(|&b| b <= x)]
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Trig(TrigPolynomial),
    Step(StepFunction),
}

impl Component {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Component::Trig(p) => p.eval(x),
            Component::Step(s) => s.eval(x),
        }
    }

    pub fn lipschitz_constant(&self) -> Option<f64> {
        match self {
            Component::Trig(p) => Some(p.lipschitz_constant()),
            Component::Step(_) => None,
        }
    }

    pub fn sup_bound(&self) -> f64 {
        match self {
            Component::Trig(p) => p.sup_bound(),
            Component::Step(s) => s.values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }
}

/// An observable `f: S¹ → R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    components: Vec<Component>,
    label: String,
}

impl Observable {
    pub fn new(components: Vec<Component>, label: impl Into<String>) -> Result<Self> {
        if components.is_empty() {
            return Err(QdsError::InvalidObservable(
                "observable needs at least one component".into(),
            ));
        }
        Ok(Self {
            components,
            label: label.into(),
        })
    }

    /// `−1` on `[0, ½)`, `+1` on `[½, 1)`.
    pub fn coin_step() -> Self {
        let step = StepFunction::new(vec![0.5], vec![-1.0, 1.0]).expect("valid step");
        Self::new(vec![Component::Step(step)], "coin_step").unwrap()
    }

    pub fn cos(freq: u32) -> Self {
        let p = TrigPolynomial {
            cos: vec![(freq, 1.0)],
            ..Default::default()
        };
        Self::new(vec![Component::Trig(p)], format!("cos{freq}")).unwrap()
    }

    pub fn sin(freq: u32) -> Self {
        let p = TrigPolynomial {
            sin: vec![(freq, 1.0)],
            ..Default::default()
        };
        Self::new(vec![Component::Trig(p)], format!("sin{freq}")).unwrap()
    }

    pub fn constant(value: f64) -> Self {
        let p = TrigPolynomial {
            constant: value,
            ..Default::default()
        };
        Self::new(vec![Component::Trig(p)], "constant").unwrap()
    }

    /// `(cos 2π j x, sin 2π j x)`.
    pub fn cos_sin(freq: u32) -> Self {
        let c = Self::cos(freq).components.remove(0);
        let s = Self::sin(freq).components.remove(0);
        Self::new(vec![c, s], format!("cos_sin{freq}")).unwrap()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Component {
        &self.components[i]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.eval(x);
        }
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        self.components.iter().map(|c| c.eval(x)).collect()
    }

    /// False when some component is a step function.
    pub fn is_lipschitz(&self) -> bool {
        self.components.iter().all(|c| matches!(c, Component::Trig(_)))
    }

    /// Largest component Lipschitz constant, if all components are Lipschitz.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        self.components
            .iter()
            .map(Component::lipschitz_constant)
            .try_fold(0.0f64, |acc, c| c.map(|c| acc.max(c)))
    }

    /// Upper bound on `max_i sup |f_i|`.
    pub fn sup_norm(&self) -> f64 {
        self.components.iter().map(Component::sup_bound).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn coin_step_values() {
        let f = Observable::coin_step();
        assert_eq!(f.eval(0.0), vec![-1.0]);
        assert_eq!(f.eval(0.4999), vec![-1.0]);
        assert_eq!(f.eval(0.5), vec![1.0]);
        assert!(!f.is_lipschitz());
        assert_eq!(f.lipschitz_constant(), None);
        assert_eq!(f.sup_norm(), 1.0);
    }

    #[test]
    fn trig_lipschitz_constant() {
        let f = Observable::cos_sin(2);
        assert_eq!(f.dim(), 2);
        assert!((f.lipschitz_constant().unwrap() - 2.0 * TAU).abs() < 1e-15);
    }

    #[test]
    fn invalid_steps() {
        assert!(StepFunction::new(vec![0.5], vec![1.0]).is_err());
        assert!(StepFunction::new(vec![0.6, 0.5], vec![1.0, 2.0, 3.0]).is_err());
        assert!(StepFunction::new(vec![1.0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn lipschitz_bound_holds(x in 0.0f64..1.0, y in 0.0f64..1.0, a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let p = TrigPolynomial { constant: 0.3, cos: vec![(1, a)], sin: vec![(3, b)] };
            let d = crate::phase::circle_distance(x, y);
            prop_assert!((p.eval(x) - p.eval(y)).abs() <= p.lipschitz_constant() * d + 1e-12);
        }
    }
}
