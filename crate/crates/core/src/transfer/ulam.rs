use super::operator::TransferOperator;
use crate::error::{QdsError, Result};
use crate::phase::{CircleMap, Density};

/// Row-stochastic Ulam matrix in sparse row form:
/// `P[i][j] = m(I_i ∩ T⁻¹ I_j) / m(I_i)`.
#[derive(Debug, Clone)]
pub struct UlamMatrix {
    size: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

pub fn ulam_matrix(map: &CircleMap, size: usize) -> Result<UlamMatrix> {
    if size < 2 {
        return Err(QdsError::InvalidArgument(format!(
            "Ulam matrix needs N >= 2, got {size}"
        )));
    }
    let op = TransferOperator::new(map, size)?;
    let nf = size as f64;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); size];
    for (j, w) in op.edges().windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let col = j % size;
        let first = ((a * nf).floor() as usize).min(size - 1);
        let last = (((b * nf).ceil() as usize).max(first + 1)).min(size);
        for (i, row) in rows.iter_mut().enumerate().take(last).skip(first) {
            let lo = a.max(i as f64 / nf);
            let hi = b.min((i + 1) as f64 / nf);
            if hi > lo {
                row.push((col, (hi - lo) * nf));
            }
        }
    }
    for row in &mut rows {
        row.sort_by_key(|e| e.0);
        row.dedup_by(|next, prev| {
            if next.0 == prev.0 {
                prev.1 += next.1;
                true
            } else {
                false
            }
        });
    }
    Ok(UlamMatrix { size, rows })
}

impl UlamMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|i| (0..self.size).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// `π ↦ π P`.
    pub fn left_apply(&self, pi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (row, &p) in self.rows.iter().zip(pi) {
            for &(j, v) in row {
                out[j] += p * v;
            }
        }
        out
    }

    /// Leading left eigenvector by power iteration, returned as a density
    /// together with the eigenvalue estimate `Σ(πP)/Σπ`.
    pub fn stationary_density(&self, tol: f64, max_iter: usize) -> Result<(Density, f64)> {
        let nf = self.size as f64;
        let mut pi = vec![1.0 / nf; self.size];
        let mut change = f64::INFINITY;
        for _ in 0..max_iter {
            let next = self.left_apply(&pi);
            let total: f64 = next.iter().sum();
            let next: Vec<f64> = next.into_iter().map(|v| v / total).collect();
            change = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
            pi = next;
            if change < tol {
                let image = self.left_apply(&pi);
                let eigenvalue = image.iter().sum::<f64>() / pi.iter().sum::<f64>();
                let density = Density::from_values(pi.iter().map(|p| p * nf).collect())?;
                return Ok((density, eigenvalue));
            }
        }
        Err(QdsError::NoConvergence {
            iterations: max_iter,
            residual: change,
        })
    }
}
