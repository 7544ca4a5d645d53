use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qds_cli::app::{coeffs_scenario, run_scenario, sweep_scenario, EXIT_CONFIG, EXIT_OK};
use qds_cli::scenario::parse_count_list;
use qds_cli::{load_scenario, CliError, WORKERS_ENV};

#[derive(Parser)]
#[command(
    name = "qdslab",
    version,
    about = "Quasistatic circle-map experiments from scenario files"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate every level of `run.n_list` and compare with the limit process.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence table and log-log slopes over several levels.
    Sweep {
        config: PathBuf,
        /// Comma-separated levels, e.g. `2^8,2^10,2^12`; defaults to `run.n_list`.
        #[arg(long, value_parser = parse_levels)]
        n: Option<Levels>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drift and diffusion coefficient only.
    Coeffs {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse and validate, then print the canonical form.
    Validate { config: PathBuf },
}

/// Parsed `--n` list.
#[derive(Debug, Clone)]
struct Levels(Vec<usize>);

fn parse_levels(s: &str) -> Result<Levels, String> {
    parse_count_list(s).map(Levels)
}

fn configure_workers() -> Result<(), CliError> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    configure_workers()?;
    match cli.command {
        Command::Validate { config } => {
            let sc = load_scenario(&config)?;
            print!("{}", sc.to_config_string());
            Ok(EXIT_OK)
        }
        Command::Coeffs { config, out } => {
            let sc = load_scenario(&config)?;
            let dir = out.unwrap_or_else(|| sc.output_dir.clone());
            let s = coeffs_scenario(&sc, &dir)?;
            println!("richardson_gap: {:e}", s.richardson_gap);
            println!("max_truncation: {}", s.max_truncation);
            println!("max_tail_estimate: {:e}", s.max_tail_estimate);
            println!("output: {}", dir.display());
            Ok(EXIT_OK)
        }
        Command::Run { config, out } => {
            let sc = load_scenario(&config)?;
            let dir = out.unwrap_or_else(|| sc.output_dir.clone());
            let s = run_scenario(&sc, &dir)?;
            for l in &s.levels {
                println!(
                    "n={} max_ks={:.4e} max_cov_dev={:.4e} qv_dev={:.4e} gap={:.4e} {}",
                    l.n,
                    l.max_ks,
                    l.max_cov_dev,
                    l.qv_dev,
                    l.admissibility_gap,
                    if l.passed { "pass" } else { "fail" }
                );
            }
            println!("output: {}", dir.display());
            Ok(s.exit_code)
        }
        Command::Sweep { config, n, out } => {
            let sc = load_scenario(&config)?;
            let dir = out.unwrap_or_else(|| sc.output_dir.join("sweep"));
            let n_list = n.map_or_else(|| sc.n_list.clone(), |l| l.0);
            let s = sweep_scenario(&sc, &n_list, &dir)?;
            for (label, fit) in [
                ("mean_error", &s.mean_error_fit),
                ("admissibility_gap", &s.admissibility_gap_fit),
                ("ks", &s.ks_fit),
            ] {
                match fit {
                    Some(f) => println!("{label}: slope {:.4} [{:.4}, {:.4}]", f.slope, f.ci_low, f.ci_high),
                    None => println!("{label}: no fit"),
                }
            }
            println!("output: {}", dir.display());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
