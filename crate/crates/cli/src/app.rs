//! The `run`, `sweep` and `coeffs` verbs and their artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qds_core::coefficients::{inadmissible_divergence_bound, inadmissible_mean_exact};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::ConfigError;
use crate::fit::{loglog_fit, SlopeFit};
use crate::runner::{run_level, summary_csv_rows, Coefficients, LevelSummary};
use crate::scenario::{Initial, MarginalFormat, Model, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Config { path: String, source: ConfigError },

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Compute(#[from] qds_core::QdsError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } | CliError::Usage(_) => EXIT_CONFIG,
            CliError::Compute(_) => EXIT_COMPUTE,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Scenario::parse(&text).map_err(|source| CliError::Config {
        path: path.display().to_string(),
        source,
    })
}

pub fn config_hash(sc: &Scenario) -> String {
    hex(&Sha256::digest(sc.to_config_string().as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files and records their digests for the manifest.
struct Artifacts {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            digests: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.digests.insert(name.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(mut self, sc: &Scenario, verb: &str) -> Result<(), CliError> {
        let manifest = Manifest {
            scenario: sc.name.clone(),
            verb: verb.to_string(),
            config_hash: config_hash(sc),
            seed: sc.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: qds_core::VERSION.to_string(),
            files: std::mem::take(&mut self.digests),
        };
        self.write("config.cfg", sc.to_config_string().as_bytes())?;
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(io_err(&path))
    }
}

#[derive(Serialize)]
struct Manifest {
    scenario: String,
    verb: String,
    config_hash: String,
    seed: u64,
    tool_version: String,
    core_version: String,
    /// SHA-256 of every other file written by the run.
    files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSummary {
    pub richardson_gap: f64,
    pub max_truncation: usize,
    pub max_tail_estimate: f64,
    pub sigma2_at_end: Vec<Vec<f64>>,
    pub zeta_at_end: Vec<f64>,
}

impl CoefficientSummary {
    fn new(c: &Coefficients) -> Self {
        let end = c.diffusion.sigma2(1.0);
        Self {
            richardson_gap: c.drift.richardson_gap,
            max_truncation: c.max_truncation(),
            max_tail_estimate: c.max_tail_estimate(),
            sigma2_at_end: end.row_iter().map(|r| r.iter().copied().collect()).collect(),
            zeta_at_end: c.drift.values.last().cloned().unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub config_hash: String,
    pub passed: bool,
    pub exit_code: i32,
    pub coefficients: CoefficientSummary,
    pub levels: Vec<LevelSummary>,
}

/// One row of the inadmissible-measure table at `t = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InadmissibleRow {
    pub n: usize,
    pub mean: f64,
    pub scaled_mean: f64,
    pub bound: f64,
    pub below_bound: bool,
}

/// `√n·μ(ζ_n(·, 1))` against `−√n/(log₂ n + 1)²` for `n = 2^10 … 2^20`
/// together with any extra levels.
pub fn inadmissible_table(k: u64, extra: &[usize]) -> Result<Vec<InadmissibleRow>, CliError> {
    let mut ns: Vec<usize> = (10..=20).map(|j| 1usize << j).chain(extra.iter().copied()).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .map(|n| {
            let mean = inadmissible_mean_exact(n, 1.0, k)?;
            let scaled_mean = (n as f64).sqrt() * mean;
            let bound = -inadmissible_divergence_bound(n, 1.0);
            Ok(InadmissibleRow {
                n,
                mean,
                scaled_mean,
                bound,
                below_bound: scaled_mean <= bound,
            })
        })
        .collect()
}

fn inadmissible_csv(rows: &[InadmissibleRow]) -> String {
    let mut s = String::from("n,mean,sqrt_n_mean,bound,below_bound\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:e},{:e},{:e},{}\n",
            r.n, r.mean, r.scaled_mean, r.bound, r.below_bound
        ));
    }
    s
}

fn prepare(sc: &Scenario) -> Result<(Model, Coefficients), CliError> {
    let model = sc.model()?;
    let coeffs = Coefficients::compute(&model, &sc.t_grid())?;
    Ok((model, coeffs))
}

fn write_coefficients(out: &mut Artifacts, coeffs: &Coefficients) -> Result<(), CliError> {
    out.write("drift.csv", coeffs.drift.to_csv().as_bytes())?;
    out.write("diffusion.csv", coeffs.diffusion.to_csv().as_bytes())
}

/// `coeffs`: drift and diffusion coefficient only.
pub fn coeffs_scenario(sc: &Scenario, out_dir: &Path) -> Result<CoefficientSummary, CliError> {
    let (_, coeffs) = prepare(sc)?;
    let mut out = Artifacts::create(out_dir)?;
    write_coefficients(&mut out, &coeffs)?;
    let summary = CoefficientSummary::new(&coeffs);
    out.write_json("coefficients.json", &summary)?;
    out.finish(sc, "coeffs")?;
    Ok(summary)
}

/// `run`: every level of `run.n_list`. Exit code 0 when all comparisons
/// pass and 3 otherwise.
pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<RunSummary, CliError> {
    let (model, coeffs) = prepare(sc)?;
    let mut out = Artifacts::create(out_dir)?;
    write_coefficients(&mut out, &coeffs)?;
    if let Initial::Inadmissible { k } = model.initial {
        let rows = inadmissible_table(k, &sc.n_list)?;
        out.write("inadmissible_table.csv", inadmissible_csv(&rows).as_bytes())?;
    }
    let mut summary_csv = String::new();
    let mut report = String::new();
    let mut levels = Vec::new();
    for (i, &n) in sc.n_list.iter().enumerate() {
        let level = run_level(sc, &model, &coeffs, n)?;
        summary_csv.push_str(&summary_csv_rows(&level, i == 0));
        out.write(&format!("centering_n{n}.csv"), level.centering.to_csv().as_bytes())?;
        match sc.marginals {
            MarginalFormat::None => {}
            MarginalFormat::Csv => out.write(&format!("marginals_n{n}.csv"), level.ensemble.to_csv().as_bytes())?,
            MarginalFormat::Binary => out.write(&format!("marginals_n{n}.bin"), &level.ensemble.to_binary())?,
        }
        report.push_str(&format!("== n = {n} ==\n"));
        report.push_str(&format!("centering: {}\n", level.summary.centering));
        report.push_str(&format!("admissibility_gap: {:e}\n", level.summary.admissibility_gap));
        report.push_str(&format!("mean_error: {:e}\n", level.summary.mean_error));
        if let Some(tv) = level.summary.coin_tv {
            report.push_str(&format!("coin_tv: {tv:e}\n"));
        }
        report.push_str(&level.comparison.to_text());
        report.push_str(&level.moments.to_text());
        levels.push(level.summary);
    }
    out.write("summary.csv", summary_csv.as_bytes())?;
    out.write("report.txt", report.as_bytes())?;
    let passed = levels.iter().all(|l| l.passed);
    let summary = RunSummary {
        scenario: sc.name.clone(),
        config_hash: config_hash(sc),
        passed,
        exit_code: if passed { EXIT_OK } else { EXIT_STATISTICAL },
        coefficients: CoefficientSummary::new(&coeffs),
        levels,
    };
    out.write_json("summary.json", &summary)?;
    out.finish(sc, "run")?;
    Ok(summary)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub scenario: String,
    pub config_hash: String,
    pub levels: Vec<LevelSummary>,
    /// Slope of the median `sup_t |ζ_n − ζ|` against `n`.
    pub mean_error_fit: Option<SlopeFit>,
    pub admissibility_gap_fit: Option<SlopeFit>,
    pub ks_fit: Option<SlopeFit>,
}

/// `sweep`: per-level statistics and log-log slopes over `n_list`.
pub fn sweep_scenario(sc: &Scenario, n_list: &[usize], out_dir: &Path) -> Result<SweepSummary, CliError> {
    if n_list.len() < 3 {
        return Err(CliError::Usage(format!(
            "a sweep needs at least 3 values of n, got {}",
            n_list.len()
        )));
    }
    let (model, coeffs) = prepare(sc)?;
    let mut out = Artifacts::create(out_dir)?;
    write_coefficients(&mut out, &coeffs)?;
    let mut levels = Vec::new();
    for &n in n_list {
        levels.push(run_level(sc, &model, &coeffs, n)?.summary);
    }
    let summary = sweep_summary(sc, levels);
    let mut csv =
        String::from("n,mean_error,admissibility_gap,max_ks,ks_at_end,max_cov_dev,qv_dev,max_kolmogorov_ratio\n");
    for l in &summary.levels {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            l.n,
            l.mean_error,
            l.admissibility_gap,
            l.max_ks,
            l.ks_at_end,
            l.max_cov_dev,
            l.qv_dev,
            l.max_kolmogorov_ratio
        ));
    }
    out.write("sweep.csv", csv.as_bytes())?;
    out.write_json("sweep.json", &summary)?;
    out.finish(sc, "sweep")?;
    Ok(summary)
}

pub fn sweep_summary(sc: &Scenario, levels: Vec<LevelSummary>) -> SweepSummary {
    let ns: Vec<usize> = levels.iter().map(|l| l.n).collect();
    let column = |f: fn(&LevelSummary) -> f64| levels.iter().map(f).collect::<Vec<_>>();
    SweepSummary {
        scenario: sc.name.clone(),
        config_hash: config_hash(sc),
        mean_error_fit: loglog_fit(&ns, &column(|l| l.mean_error)),
        admissibility_gap_fit: loglog_fit(&ns, &column(|l| l.admissibility_gap)),
        ks_fit: loglog_fit(&ns, &column(|l| l.max_ks)),
        levels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inadmissible_rows_hold() {
        let rows = inadmissible_table(3, &[4096, 1 << 14]).unwrap();
        assert_eq!(rows.len(), 11);
        assert!(rows.iter().all(|r| r.below_bound));
        assert!(rows.windows(2).all(|w| w[1].scaled_mean < w[0].scaled_mean));
    }

    #[test]
    fn hex_digest() {
        assert_eq!(
            hex(&Sha256::digest(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
