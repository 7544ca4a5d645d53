use super::branches::invert_lift;
use crate::error::{QdsError, Result};
use crate::phase::{ArraySpec, CircleMap, Density};

/// Discrete transfer operator of one map on an `M`-cell grid.
///
/// `edges[j]` is the lift preimage of `j/M` for `j = 0..=d·M`; the interval
/// `[edges[j], edges[j+1]]` is the preimage of cell `j mod M` on branch `j / M`.
#[derive(Debug, Clone)]
pub struct TransferOperator {
    cells: usize,
    edges: Vec<f64>,
}

impl TransferOperator {
    pub fn new(map: &CircleMap, cells: usize) -> Result<Self> {
        Self::build(map, cells, None)
    }

    /// Same as [`TransferOperator::new`], warm-starting the root solves from a
    /// nearby map's preimages.
    pub fn with_hint(map: &CircleMap, cells: usize, hint: &TransferOperator) -> Result<Self> {
        let usable = hint.cells == cells && hint.edges.len() == map.degree() as usize * cells + 1;
        Self::build(map, cells, usable.then_some(hint))
    }

    fn build(map: &CircleMap, cells: usize, hint: Option<&TransferOperator>) -> Result<Self> {
        if cells < 2 {
            return Err(QdsError::InvalidArgument(format!(
                "grid needs at least 2 cells, got {cells}"
            )));
        }
        let d = map.degree() as usize;
        let total = d * cells;
        let mf = cells as f64;
        let mut edges = Vec::with_capacity(total + 1);
        edges.push(0.0);
        for j in 1..total {
            let v = j as f64 / mf;
            let guess = match hint {
                Some(h) => h.edges[j],
                None => v / d as f64,
            };
            edges.push(invert_lift(map, v, guess)?);
        }
        edges.push(1.0);
        if edges.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(QdsError::BoundViolation("lift is not monotone on the grid".into()));
        }
        Ok(Self { cells, edges })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn degree(&self) -> usize {
        (self.edges.len() - 1) / self.cells
    }

    pub(crate) fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn apply(&self, h: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cells];
        self.apply_into(h, &mut out);
        out
    }

    pub fn apply_into(&self, h: &[f64], out: &mut [f64]) {
        assert_eq!(h.len(), self.cells, "grid function has wrong size");
        assert_eq!(out.len(), self.cells, "output has wrong size");
        out.iter_mut().for_each(|o| *o = 0.0);
        let mf = self.cells as f64;
        for (j, w) in self.edges.windows(2).enumerate() {
            out[j % self.cells] += integrate_interpolant(h, w[0], w[1]);
        }
        out.iter_mut().for_each(|o| *o *= mf);
    }

    /// `k`-fold application.
    pub fn power(&self, h: &[f64], k: usize) -> Vec<f64> {
        let mut cur = h.to_vec();
        let mut next = vec![0.0; self.cells];
        for _ in 0..k {
            self.apply_into(&cur, &mut next);
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }
}

/// `∫_a^b Ih(y) dy` for the periodic linear interpolant through the midpoint
/// values `h`, with `0 ≤ a ≤ b ≤ 1`.
fn integrate_interpolant(h: &[f64], a: f64, b: f64) -> f64 {
    let m = h.len();
    let mf = m as f64;
    let mut seg = (a * mf - 0.5).floor() as i64;
    let mut lo = a;
    let mut acc = 0.0;
    loop {
        let seg_end = (seg as f64 + 1.5) / mf;
        let hi = if b < seg_end { b } else { seg_end };
        let i = seg.rem_euclid(m as i64) as usize;
        let h0 = h[i];
        let h1 = h[(i + 1) % m];
        let at = |y: f64| {
            let frac = (y * mf - 0.5 - seg as f64).clamp(0.0, 1.0);
            h0 + frac * (h1 - h0)
        };
        acc += (hi - lo) * 0.5 * (at(lo) + at(hi));
        if hi >= b {
            break;
        }
        lo = hi;
        seg += 1;
    }
    acc
}

/// One application of the transfer operator of `map` to a grid function.
pub fn apply_transfer(map: &CircleMap, h: &[f64]) -> Result<Vec<f64>> {
    Ok(TransferOperator::new(map, h.len())?.apply(h))
}

/// Pushes grid functions forward along row `n` of an array, one map at a
/// time. Several functions can share each step's operator.
pub struct Pushforward<'a> {
    spec: &'a ArraySpec,
    n: usize,
    k: usize,
    current: Vec<Vec<f64>>,
    scratch: Vec<f64>,
    last: Option<(CircleMap, TransferOperator)>,
}

impl<'a> Pushforward<'a> {
    pub fn new(spec: &'a ArraySpec, n: usize, initial: Vec<f64>) -> Self {
        Self::new_many(spec, n, vec![initial])
    }

    /// All functions must live on the same grid.
    pub fn new_many(spec: &'a ArraySpec, n: usize, initial: Vec<Vec<f64>>) -> Self {
        let cells = initial.first().map_or(0, Vec::len);
        assert!(
            initial.iter().all(|h| h.len() == cells),
            "grid functions differ in size"
        );
        Self {
            spec,
            n,
            k: 0,
            current: initial,
            scratch: vec![0.0; cells],
            last: None,
        }
    }

    /// Number of maps applied so far.
    pub fn k(&self) -> usize {
        self.k
    }

    /// The first (or only) grid function.
    pub fn current(&self) -> &[f64] {
        &self.current[0]
    }

    pub fn all(&self) -> &[Vec<f64>] {
        &self.current
    }

    /// Applies `T_{n,k+1}` and returns the new (first) grid function.
    pub fn step(&mut self) -> Result<&[f64]> {
        if self.k >= self.n {
            return Err(QdsError::IndexOutOfRange {
                n: self.n,
                k: self.k + 1,
            });
        }
        let map = self.spec.map(self.n, self.k + 1)?;
        let cells = self.scratch.len();
        let op = match self.last.take() {
            Some((prev_map, prev_op)) if prev_map == map => prev_op,
            Some((_, prev_op)) => TransferOperator::with_hint(&map, cells, &prev_op)?,
            None => TransferOperator::new(&map, cells)?,
        };
        for h in &mut self.current {
            op.apply_into(h, &mut self.scratch);
            std::mem::swap(h, &mut self.scratch);
        }
        self.last = Some((map, op));
        self.k += 1;
        Ok(&self.current[0])
    }
}

/// `ρ_{n,k} = L_{n,k} ⋯ L_{n,1} ρ₀`.
pub fn evolve_pushforward(spec: &ArraySpec, n: usize, rho0: &Density, k: usize) -> Result<Density> {
    if k > n {
        return Err(QdsError::IndexOutOfRange { n, k });
    }
    let mut push = Pushforward::new(spec, n, rho0.values().to_vec());
    for _ in 0..k {
        push.step()?;
    }
    Density::from_values(push.current().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{density::grid_integral, MapCurve, ModelParams, Polynomial, SineTerm};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn perturbed(a: f64) -> CircleMap {
        CircleMap::new(2, [SineTerm { freq: 1, amp: a }]).unwrap()
    }

    fn grid(m: usize, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..m).map(|i| f((i as f64 + 0.5) / m as f64)).collect()
    }

    #[test]
    fn doubling_fixes_lebesgue() {
        let out = apply_transfer(&CircleMap::doubling(), &vec![1.0; 256]).unwrap();
        assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn doubling_annihilates_first_harmonic() {
        let h = grid(4096, |x| (TAU * x).cos());
        let out = apply_transfer(&CircleMap::doubling(), &h).unwrap();
        assert!(out.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn doubling_halves_the_sawtooth() {
        let m = 4096;
        let h = grid(m, |x| x - 0.5);
        let out = apply_transfer(&CircleMap::doubling(), &h).unwrap();
        // away from the wrap-around cell the interpolant is exact
        for i in 4..m - 4 {
            assert!((out[i] - 0.5 * h[i]).abs() < 1e-12, "cell {i}");
        }
    }

    #[test]
    fn doubling_sends_second_harmonic_to_first() {
        let m = 2048;
        let out = apply_transfer(&CircleMap::doubling(), &grid(m, |x| (2.0 * TAU * x).cos())).unwrap();
        let want = grid(m, |x| (TAU * x).cos());
        let err = out.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        // cell average of the interpolant vs point value: O(h²)
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn hint_gives_same_operator() {
        let a = TransferOperator::new(&perturbed(0.1), 512).unwrap();
        let b = TransferOperator::with_hint(
            &perturbed(0.1),
            512,
            &TransferOperator::new(&perturbed(0.09), 512).unwrap(),
        )
        .unwrap();
        let diff = a
            .edges
            .iter()
            .zip(&b.edges)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn evolve_zero_steps_is_identity() {
        let spec = ArraySpec::on_curve(
            MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), 1.0, ModelParams::default()).unwrap(),
        );
        let rho = Density::from_fn(256, |x| 1.0 + 0.5 * (TAU * x).sin()).unwrap();
        assert_eq!(evolve_pushforward(&spec, 10, &rho, 0).unwrap(), rho);
        assert!(evolve_pushforward(&spec, 10, &rho, 11).is_err());
        let doubling = ArraySpec::on_curve(MapCurve::doubling());
        let one = Density::uniform(256);
        let pushed = evolve_pushforward(&doubling, 50, &one, 37).unwrap();
        assert!(pushed.sup_distance(&one) < 1e-13);
    }

    fn arb_map() -> impl Strategy<Value = CircleMap> {
        (-0.1f64..0.1, -0.04f64..0.04, 2u32..4).prop_map(|(a, b, d)| {
            CircleMap::new(d, [SineTerm { freq: 1, amp: a }, SineTerm { freq: 2, amp: b }]).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn conserves_mass(map in arb_map(), c in prop::collection::vec(-1.0f64..1.0, 6)) {
            let h = grid(1024, |x| c[0] + c[1] * (TAU * x).cos() + c[2] * (3.0 * TAU * x).sin()
                + c[3] * if x < 0.3 { 1.0 } else { -0.5 } + c[4] * x + c[5] * (x * x));
            let out = apply_transfer(&map, &h).unwrap();
            prop_assert!((grid_integral(&out) - grid_integral(&h)).abs() < 1e-10);
        }

        #[test]
        fn preserves_positivity(map in arb_map(), c in prop::collection::vec(0.0f64..1.0, 64)) {
            let h: Vec<f64> = (0..1024).map(|i| c[i % 64] * if i % 7 == 0 { 0.0 } else { 1.0 }).collect();
            let out = apply_transfer(&map, &h).unwrap();
            prop_assert!(out.iter().all(|&v| v >= 0.0));
        }
    }
}
