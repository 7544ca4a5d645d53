use super::operator::TransferOperator;
use super::srb::{srb_solve, DEFAULT_MAX_ITER};
use crate::error::Result;
use crate::phase::density::{grid_integral, pairwise_sum_by};
use crate::phase::{CircleMap, Component, Density, DEFAULT_CELLS};

/// A single map together with its transfer operator and SRB density.
#[derive(Debug, Clone)]
pub struct FrozenMap {
    map: CircleMap,
    op: TransferOperator,
    srb: Density,
}

impl FrozenMap {
    pub fn new(map: CircleMap, cells: usize, tol: f64) -> Result<Self> {
        let op = TransferOperator::new(&map, cells)?;
        let srb = srb_solve(&op, tol, DEFAULT_MAX_ITER)?.density;
        Ok(Self { map, op, srb })
    }

    pub fn map(&self) -> &CircleMap {
        &self.map
    }

    pub fn operator(&self) -> &TransferOperator {
        &self.op
    }

    pub fn srb(&self) -> &Density {
        &self.srb
    }

    pub fn cells(&self) -> usize {
        self.op.cells()
    }

    /// Component sampled at the cell midpoints.
    pub fn sample(&self, f: &Component) -> Vec<f64> {
        let h = 1.0 / self.cells() as f64;
        (0..self.cells()).map(|i| f.eval((i as f64 + 0.5) * h)).collect()
    }

    /// `∫ f dμ̂`.
    pub fn mean(&self, f: &Component) -> f64 {
        self.srb.expect(|x| f.eval(x))
    }

    /// `f̂ = f − μ̂(f)` on the grid.
    pub fn centered(&self, f: &Component) -> Vec<f64> {
        let mean = self.mean(f);
        self.sample(f).into_iter().map(|v| v - mean).collect()
    }

    /// `m(a · b)` for grid functions.
    pub fn pair(&self, a: &[f64], b: &[f64]) -> f64 {
        pairwise_sum_by(a.len(), |i| a[i] * b[i]) / a.len() as f64
    }

    /// `ρ̂ · g` on the grid.
    pub fn weighted(&self, g: &[f64]) -> Vec<f64> {
        g.iter().zip(self.srb.values()).map(|(a, r)| a * r).collect()
    }

    /// `m(f̂ · L^k(ρ̂ f̂))`.
    pub fn correlation(&self, f: &Component, k: usize) -> f64 {
        let fhat = self.centered(f);
        let pushed = self.op.power(&self.weighted(&fhat), k);
        self.pair(&fhat, &pushed)
    }

    pub fn integral(&self, g: &[f64]) -> f64 {
        grid_integral(g)
    }
}

/// Green–Kubo term `m(f̂ · L^k(ρ̂ f̂))` of a single map on the default grid.
pub fn correlation_term(map: &CircleMap, f: &Component, k: usize) -> Result<f64> {
    let frozen = FrozenMap::new(map.clone(), DEFAULT_CELLS, 1e-12)?;
    Ok(frozen.correlation(f, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::Observable;

    #[test]
    fn coin_correlations() {
        let f = Observable::coin_step();
        let c = f.component(0);
        let d = CircleMap::doubling();
        assert!((correlation_term(&d, c, 0).unwrap() - 1.0).abs() < 1e-12);
        for k in 1..4 {
            assert!(correlation_term(&d, c, k).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn second_harmonic_is_orthogonal_after_one_step() {
        let f = Observable::cos(2);
        let d = CircleMap::doubling();
        assert!(correlation_term(&d, f.component(0), 1).unwrap().abs() < 1e-10);
        assert!((correlation_term(&d, f.component(0), 0).unwrap() - 0.5).abs() < 1e-12);
    }
}
