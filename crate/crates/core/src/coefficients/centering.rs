use super::drift::{check_grid, DriftCurve};
use crate::error::{QdsError, Result};
use crate::phase::density::pairwise_sum_by;
use crate::phase::{ArraySpec, Density, Observable, DEFAULT_CELLS};
use crate::transfer::Pushforward;

#[derive(Debug, Clone, PartialEq)]
pub enum CenteringKind {
    LebesgueMean,
    /// Mean under the named initial measure.
    MeasureMean(String),
    ExplicitZeta,
    Zero,
    Custom,
}

impl CenteringKind {
    pub fn name(&self) -> String {
        match self {
            CenteringKind::LebesgueMean => "lebesgue_mean".into(),
            CenteringKind::MeasureMean(label) => format!("measure_mean({label})"),
            CenteringKind::ExplicitZeta => "explicit_zeta".into(),
            CenteringKind::Zero => "zero".into(),
            CenteringKind::Custom => "custom".into(),
        }
    }
}

/// A centering `c_n(t)` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringCurve {
    pub t_grid: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub kind: CenteringKind,
}

impl CenteringCurve {
    pub fn new(t_grid: Vec<f64>, values: Vec<Vec<f64>>, kind: CenteringKind) -> Result<Self> {
        check_grid(&t_grid)?;
        if t_grid.len() != values.len() {
            return Err(QdsError::GridMismatch(format!(
                "{} times for {} values",
                t_grid.len(),
                values.len()
            )));
        }
        Ok(Self { t_grid, values, kind })
    }

    pub fn zero(t_grid: &[f64], dim: usize) -> Self {
        Self {
            t_grid: t_grid.to_vec(),
            values: vec![vec![0.0; dim]; t_grid.len()],
            kind: CenteringKind::Zero,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for i in 1..=self.dim() {
            s.push_str(&format!(",c_{i}"));
        }
        s.push('\n');
        for (t, v) in self.t_grid.iter().zip(&self.values) {
            s.push_str(&format!("{t:?}"));
            for x in v {
                s.push_str(&format!(",{x:e}"));
            }
            s.push('\n');
        }
        s
    }
}

/// `(⌊nt⌋, {nt})`, with `⌊nt⌋` capped at `n`.
pub fn split_time(n: usize, t: f64) -> (usize, f64) {
    let x = n as f64 * t;
    let whole = x.floor();
    if whole >= n as f64 {
        return (n, 0.0);
    }
    (whole.max(0.0) as usize, (x - whole).max(0.0))
}

/// `a_k = m(f · ρ_{n,k})` for `k = 0, …, n`, where `ρ_{n,k}` is the
/// pushforward of `rho0` under the first `k` maps of row `n`.
pub fn step_means(spec: &ArraySpec, n: usize, f: &Observable, rho0: &Density) -> Result<Vec<Vec<f64>>> {
    Ok(step_means_many(spec, n, f, &[rho0])?.remove(0))
}

/// [`step_means`] for several initial densities on the same grid, sharing
/// one transfer operator per step.
pub fn step_means_many(spec: &ArraySpec, n: usize, f: &Observable, initial: &[&Density]) -> Result<Vec<Vec<Vec<f64>>>> {
    if n == 0 {
        return Err(QdsError::InvalidArgument("n must be at least 1".into()));
    }
    let Some(first) = initial.first() else {
        return Ok(Vec::new());
    };
    let cells = first.cells();
    if initial.iter().any(|d| d.cells() != cells) {
        return Err(QdsError::GridMismatch("initial densities use different grids".into()));
    }
    let samples: Vec<Vec<f64>> = f
        .components()
        .iter()
        .map(|c| (0..cells).map(|i| c.eval(first.midpoint(i))).collect())
        .collect();
    let mean_of = |rho: &[f64]| -> Vec<f64> {
        samples
            .iter()
            .map(|s| pairwise_sum_by(cells, |i| s[i] * rho[i]) / cells as f64)
            .collect()
    };
    let mut push = Pushforward::new_many(spec, n, initial.iter().map(|d| d.values().to_vec()).collect());
    let mut out: Vec<Vec<Vec<f64>>> = push.all().iter().map(|h| vec![mean_of(h)]).collect();
    for _ in 0..n {
        push.step()?;
        for (series, h) in out.iter_mut().zip(push.all()) {
            series.push(mean_of(h));
        }
    }
    Ok(out)
}

/// `c(t) = (1/n)(Σ_{k<⌊nt⌋} a_k + {nt}·a_{⌊nt⌋})` on `t_grid`.
pub fn centering_from_step_means(n: usize, a: &[Vec<f64>], t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    if a.len() != n + 1 {
        return Err(QdsError::GridMismatch(format!(
            "expected {} step means, got {}",
            n + 1,
            a.len()
        )));
    }
    check_grid(t_grid)?;
    let d = a[0].len();
    let mut prefix = vec![vec![0.0; d]; n + 1];
    for k in 0..n {
        for c in 0..d {
            prefix[k + 1][c] = prefix[k][c] + a[k][c];
        }
    }
    Ok(t_grid
        .iter()
        .map(|&t| {
            let (whole, frac) = split_time(n, t);
            (0..d)
                .map(|c| (prefix[whole][c] + frac * a[whole][c]) / n as f64)
                .collect()
        })
        .collect())
}

/// `m(ζ_n(·, t))`: the mean of the rescaled Birkhoff sum under Lebesgue measure.
pub fn lebesgue_centering(spec: &ArraySpec, n: usize, f: &Observable, t_grid: &[f64]) -> Result<CenteringCurve> {
    let a = step_means(spec, n, f, &Density::uniform(DEFAULT_CELLS))?;
    Ok(CenteringCurve {
        t_grid: t_grid.to_vec(),
        values: centering_from_step_means(n, &a, t_grid)?,
        kind: CenteringKind::LebesgueMean,
    })
}

/// `ν(ζ_n(·, t))` for an initial measure with density `nu`.
pub fn measure_centering(
    spec: &ArraySpec,
    n: usize,
    f: &Observable,
    nu: &Density,
    label: &str,
    t_grid: &[f64],
) -> Result<CenteringCurve> {
    let a = step_means(spec, n, f, nu)?;
    Ok(CenteringCurve {
        t_grid: t_grid.to_vec(),
        values: centering_from_step_means(n, &a, t_grid)?,
        kind: CenteringKind::MeasureMean(label.to_string()),
    })
}

/// Explicit centering `c(t) = ζ(t)`.
pub fn explicit_centering(drift: &DriftCurve) -> CenteringCurve {
    CenteringCurve {
        t_grid: drift.t_grid.clone(),
        values: drift.values.clone(),
        kind: CenteringKind::ExplicitZeta,
    }
}

/// `sup_t √n |c(t) − reference(t)|` over a shared grid.
pub fn centering_gap(n: usize, c: &CenteringCurve, reference: &CenteringCurve) -> Result<f64> {
    if c.t_grid != reference.t_grid || c.dim() != reference.dim() {
        return Err(QdsError::GridMismatch("centerings are on different grids".into()));
    }
    let sup = c
        .values
        .iter()
        .zip(&reference.values)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    Ok((n as f64).sqrt() * sup)
}

/// `sup_t |√n c(t) − √n m(ζ_n(·, t))|` over the grid of `c`.
pub fn admissibility_gap(spec: &ArraySpec, n: usize, f: &Observable, c: &CenteringCurve) -> Result<f64> {
    let reference = lebesgue_centering(spec, n, f, &c.t_grid)?;
    centering_gap(n, c, &reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::{MapCurve, ModelParams, Polynomial};

    fn grid() -> Vec<f64> {
        (0..=16).map(|i| i as f64 / 16.0).collect()
    }

    #[test]
    fn split_time_edges() {
        assert_eq!(split_time(64, 0.0), (0, 0.0));
        assert_eq!(split_time(64, 1.0), (64, 0.0));
        assert_eq!(split_time(64, 0.5), (32, 0.0));
        let (w, f) = split_time(10, 0.25);
        assert_eq!(w, 2);
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn doubling_lebesgue_centering_vanishes() {
        let spec = ArraySpec::on_curve(MapCurve::doubling());
        let c = lebesgue_centering(&spec, 64, &Observable::cos(1), &grid()).unwrap();
        assert!(c.values.iter().all(|v| v[0].abs() < 1e-12));
        assert_eq!(admissibility_gap(&spec, 64, &Observable::cos(1), &c).unwrap(), 0.0);
    }

    #[test]
    fn constant_observable_gives_t() {
        let curve = MapCurve::single_frequency(Polynomial::linear(0.0, 0.1), 1.0, ModelParams::default()).unwrap();
        let spec = ArraySpec::on_curve(curve);
        let t = [0.0, 0.013, 0.3, 0.99, 1.0];
        let c = lebesgue_centering(&spec, 50, &Observable::constant(1.0), &t).unwrap();
        for (ti, v) in t.iter().zip(&c.values) {
            assert!((v[0] - ti).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolation_between_steps() {
        let a = vec![vec![1.0], vec![3.0], vec![5.0]];
        let c = centering_from_step_means(2, &a, &[0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let want = [0.0, 0.25, 0.5, 1.25, 2.0];
        for (v, w) in c.iter().zip(want) {
            assert!((v[0] - w).abs() < 1e-15);
        }
        assert!(centering_from_step_means(3, &a, &[0.0]).is_err());
    }

    #[test]
    fn gap_requires_matching_grids() {
        let a = CenteringCurve::zero(&[0.0, 1.0], 1);
        let b = CenteringCurve::zero(&[0.0, 0.5, 1.0], 1);
        assert!(centering_gap(4, &a, &b).is_err());
        let c = CenteringCurve::new(vec![0.0, 1.0], vec![vec![0.0], vec![0.5]], CenteringKind::Custom).unwrap();
        assert!((centering_gap(16, &c, &a).unwrap() - 2.0).abs() < 1e-15);
    }
}
