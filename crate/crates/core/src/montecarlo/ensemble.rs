use crate::coefficients::CenteringKind;
use crate::error::{QdsError, Result};

/// How orbits were iterated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Double-precision iteration of the maps, lift reduced mod 1 each step.
    Float,
    /// Exact binary shift for the doubling map.
    BitShift,
    /// Paths of the limiting diffusion.
    Diffusion,
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Backend::Float => "float",
            Backend::BitShift => "bit_shift",
            Backend::Diffusion => "diffusion",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMeta {
    pub seed: u64,
    pub initial: String,
    pub observable: String,
    pub backend: Backend,
}

/// Values `χ_n(x_i, t_j)` for every member `i` and grid time `t_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub n: usize,
    pub t_grid: Vec<f64>,
    pub dim: usize,
    pub centering: CenteringKind,
    pub meta: EnsembleMeta,
    /// Member-major: `values[(i * t_grid.len() + j) * dim + c]`.
    values: Vec<f64>,
}

const MAGIC: &[u8; 8] = b"QDSENS1\0";

impl PathEnsemble {
    pub fn new(
        n: usize,
        t_grid: Vec<f64>,
        dim: usize,
        centering: CenteringKind,
        meta: EnsembleMeta,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 || t_grid.is_empty() || values.len() % (t_grid.len() * dim) != 0 {
            return Err(QdsError::GridMismatch(format!(
                "{} values do not fill a grid of {} times and dimension {dim}",
                values.len(),
                t_grid.len()
            )));
        }
        Ok(Self {
            n,
            t_grid,
            dim,
            centering,
            meta,
            values,
        })
    }

    pub fn members(&self) -> usize {
        self.values.len() / (self.t_grid.len() * self.dim)
    }

    pub fn value(&self, member: usize, t_index: usize, component: usize) -> f64 {
        self.values[(member * self.t_grid.len() + t_index) * self.dim + component]
    }

    /// One member's path, `t_grid.len() * dim` values.
    pub fn path(&self, member: usize) -> &[f64] {
        let w = self.t_grid.len() * self.dim;
        &self.values[member * w..(member + 1) * w]
    }

    /// `χ_n(x_i, t_j)` component `c` over all members.
    pub fn marginal(&self, t_index: usize, component: usize) -> Vec<f64> {
        (0..self.members()).map(|i| self.value(i, t_index, component)).collect()
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// CSV with columns `member, t, value_1..value_d`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("member,t");
        for c in 1..=self.dim {
            s.push_str(&format!(",value_{c}"));
        }
        s.push('\n');
        for i in 0..self.members() {
            for (j, t) in self.t_grid.iter().enumerate() {
                s.push_str(&format!("{i},{t:?}"));
                for c in 0..self.dim {
                    s.push_str(&format!(",{:e}", self.value(i, j, c)));
                }
                s.push('\n');
            }
        }
        s
    }

    /// Little-endian binary: magic `QDSENS1\0`, then `u64` n, members,
    /// grid size and dimension, the grid as `f64`, then the member-major values.
    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(40 + 8 * (self.t_grid.len() + self.values.len()));
        out.extend_from_slice(MAGIC);
        for v in [self.n, self.members(), self.t_grid.len(), self.dim] {
            out.extend_from_slice(&(v as u64).to_le_bytes());
        }
        for x in self.t_grid.iter().chain(&self.values) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    /// Reads [`PathEnsemble::to_binary`] output; metadata is not stored and
    /// comes back from `meta` and `centering`.
    pub fn from_binary(bytes: &[u8], centering: CenteringKind, meta: EnsembleMeta) -> Result<Self> {
        let bad = |m: &str| QdsError::InvalidArgument(format!("malformed ensemble file: {m}"));
        if bytes.len() < 40 || &bytes[..8] != MAGIC {
            return Err(bad("missing header"));
        }
        let word = |i: usize| u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap()) as usize;
        let (n, members, t_len, dim) = (word(0), word(1), word(2), word(3));
        let count = t_len
            .checked_mul(dim)
            .and_then(|w| w.checked_mul(members))
            .and_then(|v| v.checked_add(t_len))
            .ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != 40 + 8 * count {
            return Err(bad("length does not match header"));
        }
        let floats: Vec<f64> = bytes[40..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let (grid, values) = floats.split_at(t_len);
        Self::new(n, grid.to_vec(), dim, centering, meta, values.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PathEnsemble {
        let meta = EnsembleMeta {
            seed: 1,
            initial: "uniform".into(),
            observable: "cos1".into(),
            backend: Backend::Float,
        };
        let values = (0..12).map(|i| i as f64 * 0.5).collect();
        PathEnsemble::new(8, vec![0.0, 0.5, 1.0], 2, CenteringKind::Zero, meta, values).unwrap()
    }

    #[test]
    fn layout() {
        let e = sample();
        assert_eq!(e.members(), 2);
        assert_eq!(e.value(1, 2, 1), 5.5);
        assert_eq!(e.marginal(1, 0), vec![1.0, 4.0]);
        assert_eq!(e.path(0).len(), 6);
        assert!(e.to_csv().starts_with("member,t,value_1,value_2\n0,0.0,0e0,5e-1\n"));
    }

    #[test]
    fn binary_round_trip() {
        let e = sample();
        let back = PathEnsemble::from_binary(&e.to_binary(), e.centering.clone(), e.meta.clone()).unwrap();
        assert_eq!(back, e);
        let mut broken = e.to_binary();
        broken.pop();
        assert!(PathEnsemble::from_binary(&broken, CenteringKind::Zero, e.meta.clone()).is_err());
    }
}
