use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use super::drift::check_grid;
use super::COEFF_SRB_TOL;
use crate::error::{QdsError, Result};
use crate::phase::{CircleMap, MapCurve, Observable, DEFAULT_CELLS};
use crate::transfer::FrozenMap;

/// Hard cap on the number of Green–Kubo terms.
pub const K_MAX: usize = 500;

pub const DEFAULT_GK_TOL: f64 = 1e-10;

const CLAMP_TOL: f64 = 1e-10;
const ASYMMETRY_TOL: f64 = 1e-8;

/// One evaluation of `σ̂²_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaValue {
    pub matrix: DMatrix<f64>,
    /// Index of the last Green–Kubo term included.
    pub truncation: usize,
    /// Geometric bound on the neglected terms.
    pub tail_estimate: f64,
}

impl SigmaValue {
    /// The `(0, 0)` entry, i.e. the scalar coefficient when `d = 1`.
    pub fn scalar(&self) -> f64 {
        self.matrix[(0, 0)]
    }
}

/// Green–Kubo series of a single map, on a grid of `cells` cells.
pub fn sigma2_for_map(map: &CircleMap, f: &Observable, tol: f64, cells: usize) -> Result<SigmaValue> {
    if !(tol > 0.0) {
        return Err(QdsError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let frozen = FrozenMap::new(map.clone(), cells, COEFF_SRB_TOL)?;
    let d = f.dim();
    let fhat: Vec<Vec<f64>> = f.components().iter().map(|c| frozen.centered(c)).collect();
    let mut pushed: Vec<Vec<f64>> = fhat.iter().map(|g| frozen.weighted(g)).collect();

    let term = |pushed: &[Vec<f64>]| DMatrix::from_fn(d, d, |i, j| frozen.pair(&fhat[i], &pushed[j]));
    let term0 = term(&pushed);
    let scale = term0.amax().max(f64::MIN_POSITIVE);
    let mut sigma = term0;
    let mut prev_norm = scale;
    let mut ratios: Vec<f64> = Vec::new();
    let op = frozen.operator();
    for k in 1..=K_MAX {
        for g in pushed.iter_mut() {
            *g = op.apply(g);
        }
        let tk = term(&pushed);
        sigma += &tk + tk.transpose();
        let norm = tk.amax();
        if norm <= 1e-15 * scale.max(tol) {
            return finish(sigma, k, 2.0 * norm);
        }
        ratios.push(norm / prev_norm);
        prev_norm = norm;
        if ratios.len() >= 3 {
            let theta = ratios[ratios.len() - 3..].iter().copied().fold(0.0, f64::max);
            if theta < 1.0 {
                let tail = 2.0 * norm * theta / (1.0 - theta);
                if norm < tol * (1.0 - theta) && tail < tol {
                    return finish(sigma, k, tail);
                }
            }
        }
    }
    Err(QdsError::Divergence {
        terms: K_MAX,
        last_term: prev_norm,
    })
}

fn finish(sigma: DMatrix<f64>, truncation: usize, tail_estimate: f64) -> Result<SigmaValue> {
    let sym = (&sigma + sigma.transpose()) * 0.5;
    Ok(SigmaValue {
        matrix: clamp_psd(sym)?,
        truncation,
        tail_estimate,
    })
}

fn clamp_psd(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() == 1 {
        let v = m[(0, 0)];
        if v < -CLAMP_TOL {
            return Err(QdsError::NotPsd(format!("negative variance {v:e}")));
        }
        return Ok(DMatrix::from_element(1, 1, v.max(0.0)));
    }
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(QdsError::NotPsd(format!("eigenvalue {min:e}")));
    }
    if min >= 0.0 {
        return Ok(m);
    }
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    Ok(&eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose())
}

/// `σ̂²_t` for the map `γ_t` (right limit at jump points).
pub fn sigma2_at(curve: &MapCurve, f: &Observable, t: f64, tol: f64) -> Result<SigmaValue> {
    if !(0.0..=1.0).contains(&t) {
        return Err(QdsError::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    sigma2_for_map(&curve.at(t), f, tol, DEFAULT_CELLS)
}

/// Symmetric PSD square root.
pub fn sigma_sqrt(sigma2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !sigma2.is_square() {
        return Err(QdsError::NotPsd(format!(
            "{}x{} matrix is not square",
            sigma2.nrows(),
            sigma2.ncols()
        )));
    }
    let asym = (sigma2 - sigma2.transpose()).amax();
    if asym > ASYMMETRY_TOL {
        return Err(QdsError::NotPsd(format!("asymmetry {asym:e}")));
    }
    let sym = (sigma2 + sigma2.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.min();
    if min < -CLAMP_TOL {
        return Err(QdsError::NotPsd(format!("eigenvalue {min:e}")));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose();
    Ok((&root + root.transpose()) * 0.5)
}

/// `t ↦ σ̂²_t` on a grid. Jump points inside the grid range appear twice:
/// first with the left-limit value, then with the right-continuous one, so
/// that piecewise-linear integration never interpolates across a jump.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionCurve {
    pub t_grid: Vec<f64>,
    pub sigma2_values: Vec<DMatrix<f64>>,
    /// Largest Green–Kubo truncation index over the grid.
    pub truncation: usize,
    /// Largest tail bound over the grid.
    pub tail_estimate: f64,
}

impl DiffusionCurve {
    pub fn new(t_grid: Vec<f64>, sigma2_values: Vec<DMatrix<f64>>) -> Result<Self> {
        if t_grid.is_empty() || t_grid.len() != sigma2_values.len() {
            return Err(QdsError::GridMismatch(format!(
                "{} times for {} values",
                t_grid.len(),
                sigma2_values.len()
            )));
        }
        check_grid(&t_grid)?;
        let d = sigma2_values[0].nrows();
        if sigma2_values.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(QdsError::GridMismatch("inconsistent matrix dimensions".into()));
        }
        Ok(Self {
            t_grid,
            sigma2_values,
            truncation: 0,
            tail_estimate: 0.0,
        })
    }

    /// Constant coefficient on `[0, 1]`.
    pub fn constant(sigma2: DMatrix<f64>) -> Self {
        Self {
            t_grid: vec![0.0, 1.0],
            sigma2_values: vec![sigma2.clone(), sigma2],
            truncation: 0,
            tail_estimate: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.sigma2_values[0].nrows()
    }

    /// Piecewise-linear, right-continuous interpolation; constant outside the grid.
    pub fn sigma2(&self, t: f64) -> DMatrix<f64> {
        let g = &self.t_grid;
        if t <= g[0] {
            return self.sigma2_values[0].clone();
        }
        if t >= g[g.len() - 1] {
            return self.sigma2_values[g.len() - 1].clone();
        }
        // last index with g[i] <= t
        let i = g.partition_point(|&s| s <= t) - 1;
        let (a, b) = (g[i], g[i + 1]);
        if b == a {
            return self.sigma2_values[i + 1].clone();
        }
        let w = (t - a) / (b - a);
        &self.sigma2_values[i] * (1.0 - w) + &self.sigma2_values[i + 1] * w
    }

    /// `∫₀ᵗ σ̂²_s ds` by the trapezoid rule on the stored grid.
    pub fn quadratic_variation(&self, t: f64) -> DMatrix<f64> {
        let d = self.dim();
        let g = &self.t_grid;
        let mut acc = DMatrix::zeros(d, d);
        let start = g[0];
        if t > start {
            // coefficient held constant below the first node
            acc += &self.sigma2_values[0] * start.min(t);
        } else {
            return &self.sigma2_values[0] * t.max(0.0);
        }
        for i in 0..g.len() - 1 {
            let (a, b) = (g[i], g[i + 1]);
            if a >= t {
                break;
            }
            if b == a {
                continue;
            }
            let hi = b.min(t);
            let end_val = if hi == b {
                self.sigma2_values[i + 1].clone()
            } else {
                self.sigma2(hi)
            };
            acc += (&self.sigma2_values[i] + end_val) * (0.5 * (hi - a));
        }
        let last = g[g.len() - 1];
        if t > last {
            acc += &self.sigma2_values[g.len() - 1] * (t - last);
        }
        acc
    }

    /// CSV with one column per matrix entry, row-major.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut s = String::from("t");
        for i in 1..=d {
            for j in 1..=d {
                s.push_str(&format!(",sigma2_{i}{j}"));
            }
        }
        s.push('\n');
        for (t, m) in self.t_grid.iter().zip(&self.sigma2_values) {
            s.push_str(&format!("{t:?}"));
            for i in 0..d {
                for j in 0..d {
                    s.push_str(&format!(",{:e}", m[(i, j)]));
                }
            }
            s.push('\n');
        }
        s
    }
}

/// Evaluates `σ̂²` on `t_grid` in parallel, adding left-limit nodes at jumps.
pub fn diffusion_curve(curve: &MapCurve, f: &Observable, t_grid: &[f64], tol: f64) -> Result<DiffusionCurve> {
    check_grid(t_grid)?;
    if t_grid.is_empty() {
        return Err(QdsError::GridMismatch("empty time grid".into()));
    }
    let (lo, hi) = (t_grid[0], t_grid[t_grid.len() - 1]);
    let jumps: Vec<f64> = curve.jump_points().into_iter().filter(|&j| j > lo && j <= hi).collect();
    // (time, evaluate as left limit)
    let mut nodes: Vec<(f64, bool)> = t_grid.iter().map(|&t| (t, false)).collect();
    for &j in &jumps {
        nodes.push((j, true));
        if !t_grid.contains(&j) {
            nodes.push((j, false));
        }
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    nodes.dedup();

    let values: Result<Vec<SigmaValue>> = nodes
        .par_iter()
        .map(|&(t, left)| {
            let map = if left { curve.left_limit(t) } else { curve.at(t) };
            sigma2_for_map(&map, f, tol, DEFAULT_CELLS)
        })
        .collect();
    let values = values?;
    Ok(DiffusionCurve {
        t_grid: nodes.iter().map(|n| n.0).collect(),
        truncation: values.iter().map(|v| v.truncation).max().unwrap_or(0),
        tail_estimate: values.iter().map(|v| v.tail_estimate).fold(0.0, f64::max),
        sigma2_values: values.into_iter().map(|v| v.matrix).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{ModelParams, Polynomial, SineTerm};
    use approx::assert_abs_diff_eq;

    #[test]
    fn doubling_values() {
        let d = MapCurve::doubling();
        let coin = sigma2_at(&d, &Observable::coin_step(), 0.5, 1e-10).unwrap();
        assert_abs_diff_eq!(coin.scalar(), 1.0, epsilon = 1e-10);
        let cos = sigma2_at(&d, &Observable::cos(1), 0.0, 1e-10).unwrap();
        assert_abs_diff_eq!(cos.scalar(), 0.5, epsilon = 1e-10);
        assert!(cos.tail_estimate < 1e-10);
    }

    #[test]
    fn vector_doubling_is_half_identity() {
        let s = sigma2_at(&MapCurve::doubling(), &Observable::cos_sin(1), 0.3, 1e-10).unwrap();
        let want = DMatrix::identity(2, 2) * 0.5;
        assert!((s.matrix - want).amax() < 1e-10);
    }

    #[test]
    fn constant_observable_has_no_diffusion() {
        let map = CircleMap::new(2, [SineTerm { freq: 1, amp: 0.1 }]).unwrap();
        let s = sigma2_for_map(&map, &Observable::constant(1.0), 1e-10, 4096).unwrap();
        assert!(s.scalar() < 1e-20);
        assert_eq!(s.truncation, 1);
    }

    #[test]
    fn perturbed_map_series_converges() {
        let map = CircleMap::new(2, [SineTerm { freq: 1, amp: 0.1 }]).unwrap();
        let s = sigma2_for_map(&map, &Observable::cos(1), 1e-10, 4096).unwrap();
        assert!(s.truncation > 3 && s.truncation < K_MAX);
        assert!(s.tail_estimate < 1e-10);
        // explicit partial sums agree
        let frozen = FrozenMap::new(map, 4096, 1e-12).unwrap();
        let c = Observable::cos(1);
        let mut direct = frozen.correlation(c.component(0), 0);
        for k in 1..=s.truncation {
            direct += 2.0 * frozen.correlation(c.component(0), k);
        }
        assert_abs_diff_eq!(s.scalar(), direct, epsilon = 1e-12);
        assert!(s.scalar() > 0.0);
    }

    #[test]
    fn sqrt_examples() {
        let one = sigma_sqrt(&DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_abs_diff_eq!(one[(0, 0)], 1.0, epsilon = 1e-15);
        let diag = sigma_sqrt(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, 2.0]))).unwrap();
        assert_abs_diff_eq!(diag[(0, 0)], 0.5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(diag[(1, 1)], 2.0f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(diag[(0, 1)], 0.0, epsilon = 1e-14);
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]);
        let r = sigma_sqrt(&m).unwrap();
        assert!((&r * &r - &m).amax() < 1e-10);
        assert!(sigma_sqrt(&DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).is_err());
        assert!(sigma_sqrt(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5])).is_err());
    }

    #[test]
    fn tiny_negative_eigenvalues_are_clamped() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0 - 1e-12]);
        let c = clamp_psd(m).unwrap();
        assert!(SymmetricEigen::new(c).eigenvalues.min() >= -1e-15);
        assert!(clamp_psd(DMatrix::from_element(1, 1, -1e-12)).unwrap()[(0, 0)] == 0.0);
        assert!(clamp_psd(DMatrix::from_element(1, 1, -1e-6)).is_err());
    }

    #[test]
    fn curve_with_jump_gets_duplicate_node() {
        let curve = MapCurve::new(
            2,
            &[0.5],
            vec![
                vec![(1, Polynomial::constant(0.08))],
                vec![(1, Polynomial::constant(-0.08))],
            ],
            1.0,
            ModelParams::default(),
        )
        .unwrap();
        let dc = diffusion_curve(&curve, &Observable::cos(1), &[0.0, 0.25, 0.5, 0.75, 1.0], 1e-10).unwrap();
        assert_eq!(dc.t_grid, vec![0.0, 0.25, 0.5, 0.5, 0.75, 1.0]);
        let (a, b) = (dc.sigma2_values[0][(0, 0)], dc.sigma2_values[5][(0, 0)]);
        assert_abs_diff_eq!(dc.sigma2_values[2][(0, 0)], a, epsilon = 1e-12);
        assert_abs_diff_eq!(dc.sigma2_values[3][(0, 0)], b, epsilon = 1e-12);
        assert_abs_diff_eq!(dc.quadratic_variation(1.0)[(0, 0)], 0.5 * (a + b), epsilon = 1e-12);
        assert_abs_diff_eq!(dc.quadratic_variation(0.6)[(0, 0)], 0.5 * a + 0.1 * b, epsilon = 1e-12);
        assert_abs_diff_eq!(dc.sigma2(0.5)[(0, 0)], b, epsilon = 1e-12);
    }

    #[test]
    fn constant_curve_variation() {
        let dc = DiffusionCurve::constant(DMatrix::from_element(1, 1, 2.0));
        assert_abs_diff_eq!(dc.quadratic_variation(0.3)[(0, 0)], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(dc.quadratic_variation(0.0)[(0, 0)], 0.0);
    }
}
