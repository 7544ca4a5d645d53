//! Typed scenarios and their canonical text form.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::PathBuf;

use qds_core::coefficients::inadmissible_epsilon;
use qds_core::diffusion::Tolerances;
use qds_core::montecarlo::{uniform_grid, MIN_ENSEMBLE};
use qds_core::phase::{ArraySpec, Density, MapCurve, ModelParams, Observable, Polynomial, DEFAULT_CELLS};
use qds_core::QdsError;

use crate::config::{ConfigError, Entry, RawConfig};

#[derive(Debug, Clone, PartialEq)]
pub enum ArrayModeSpec {
    OnCurve,
    Perturbed { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    CoinStep,
    Cos { freq: u32 },
    Sin { freq: u32 },
    CosSin { freq: u32 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Uniform,
    /// `1 + a cos(2π j x)`.
    Trig {
        amplitude: f64,
        freq: u32,
    },
    /// The tent-shaped `1 + a (1 − 4|x − ½|)`.
    Lipschitz {
        amplitude: f64,
    },
    /// The singular measure with tail index `k`.
    Inadmissible {
        k: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CenteringSpec {
    LebesgueMean,
    /// Mean under the initial measure.
    MeasureMean,
    ExplicitZeta,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalFormat {
    None,
    Csv,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub lambda: f64,
    pub a_star: f64,
    pub degree: u32,
    /// Sine frequency carrying the amplitude paths.
    pub frequency: u32,
    pub eta: f64,
    pub jumps: Vec<f64>,
    pub pieces: Vec<Polynomial>,
    pub array: ArrayModeSpec,
    pub observable: ObservableSpec,
    pub initial: InitialSpec,
    pub centering: CenteringSpec,
    pub n_list: Vec<usize>,
    pub ensemble: usize,
    pub seed: u64,
    pub t_points: usize,
    pub tol: Tolerances,
    pub output_dir: PathBuf,
    pub marginals: MarginalFormat,
}

/// Everything a run needs, built from a validated scenario.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ArraySpec,
    pub observable: Observable,
    pub initial: Initial,
}

#[derive(Debug, Clone)]
pub enum Initial {
    Density { density: Density, label: String },
    Inadmissible { k: u64 },
}

impl Initial {
    pub fn label(&self) -> String {
        match self {
            Initial::Density { label, .. } => label.clone(),
            Initial::Inadmissible { k } => format!("inadmissible(k={k})"),
        }
    }
}

struct Reader<'a> {
    raw: &'a RawConfig,
    used: BTreeSet<String>,
}

impl<'a> Reader<'a> {
    fn take(&mut self, key: &str) -> Option<&'a Entry> {
        let entry = self.raw.get(key)?;
        self.used.insert(key.to_string());
        Some(entry)
    }

    fn required<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        let entry = self
            .take(key)
            .ok_or_else(|| ConfigError::Missing { field: key.into() })?;
        parse(&entry.value).map_err(|message| invalid(key, entry.line, message))
    }

    fn optional<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl FnOnce(&str) -> Result<T, String>,
    ) -> Result<T, ConfigError> {
        match self.take(key) {
            None => Ok(default),
            Some(entry) => parse(&entry.value).map_err(|message| invalid(key, entry.line, message)),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.raw.get(key).map_or(0, |e| e.line)
    }

    fn finish(self) -> Result<(), ConfigError> {
        let unknown = self
            .raw
            .iter()
            .filter(|(k, _)| !self.used.contains(*k))
            .min_by_key(|(_, e)| e.line);
        match unknown {
            Some((key, entry)) => Err(ConfigError::Unknown {
                line: entry.line,
                field: key.to_string(),
            }),
            None => Ok(()),
        }
    }
}

fn invalid(field: &str, line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("expected a finite number, got `{s}`")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn parse_u32(s: &str) -> Result<u32, String> {
    s.parse::<u32>()
        .map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse::<u64>()
        .map_err(|_| format!("expected a nonnegative integer, got `{s}`"))
}

/// Accepts `4096` or `2^12`.
pub fn parse_count(s: &str) -> Result<usize, String> {
    let s = s.trim();
    let value = match s.split_once('^') {
        Some((base, exp)) => {
            let base: usize = base.trim().parse().map_err(|_| format!("bad base in `{s}`"))?;
            let exp: u32 = exp.trim().parse().map_err(|_| format!("bad exponent in `{s}`"))?;
            base.checked_pow(exp).ok_or_else(|| format!("`{s}` overflows"))?
        }
        None => s
            .parse()
            .map_err(|_| format!("expected a positive integer, got `{s}`"))?,
    };
    if value == 0 {
        return Err("must be at least 1".into());
    }
    Ok(value)
}

/// Comma-separated counts, e.g. `2^8, 2^10, 4096`.
pub fn parse_count_list(s: &str) -> Result<Vec<usize>, String> {
    let list: Vec<usize> = s.split(',').map(parse_count).collect::<Result<_, _>>()?;
    if list.is_empty() {
        return Err("empty list".into());
    }
    Ok(list)
}

fn parse_float_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| parse_f64(x.trim())).collect()
}

fn pieces_index(key: &str) -> Option<Result<usize, ()>> {
    let rest = key.strip_prefix("curve.pieces[")?;
    let (idx, tail) = rest.split_once(']')?;
    if tail != ".eps_expr" {
        return None;
    }
    Some(idx.parse::<usize>().map_err(|_| ()))
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_raw(&RawConfig::parse(text)?)
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader {
            raw,
            used: BTreeSet::new(),
        };
        let name = r.required("name", |s| {
            if s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                Ok(s.to_string())
            } else {
                Err("use letters, digits, `_` and `-` only".into())
            }
        })?;
        let lambda = r.optional("model.lambda", 1.2, parse_f64)?;
        let a_star = r.optional("model.a_star", 50.0, parse_f64)?;
        let degree = r.optional("curve.degree", 2, parse_u32)?;
        let frequency = r.optional("curve.frequency", 1, parse_u32)?;
        let eta = r.required("curve.eta", parse_f64)?;
        let jumps = r.optional("curve.jumps", Vec::new(), parse_float_list)?;

        let mut indices = Vec::new();
        for (key, entry) in raw.iter() {
            if let Some(idx) = pieces_index(key) {
                let idx = idx.map_err(|_| invalid(key, entry.line, "bad piece index"))?;
                indices.push((idx, key.to_string()));
            }
        }
        indices.sort();
        if indices.is_empty() {
            return Err(ConfigError::Missing {
                field: "curve.pieces[0].eps_expr".into(),
            });
        }
        let mut pieces = Vec::with_capacity(indices.len());
        for (expected, (idx, key)) in indices.iter().enumerate() {
            if *idx != expected {
                return Err(ConfigError::Missing {
                    field: format!("curve.pieces[{expected}].eps_expr"),
                });
            }
            pieces.push(r.required(key, |s| s.parse::<Polynomial>().map_err(|e| e.to_string()))?);
        }
        if pieces.len() != jumps.len() + 1 {
            return Err(invalid(
                "curve.jumps",
                r.line("curve.jumps"),
                format!(
                    "{} jump points need {} pieces, found {}",
                    jumps.len(),
                    jumps.len() + 1,
                    pieces.len()
                ),
            ));
        }

        let array = match r
            .optional("array.mode", "on_curve".to_string(), |s| Ok(s.to_string()))?
            .as_str()
        {
            "on_curve" => ArrayModeSpec::OnCurve,
            "perturbed" => ArrayModeSpec::Perturbed {
                scale: r.optional("array.scale", 0.2, parse_f64)?,
            },
            other => {
                return Err(invalid(
                    "array.mode",
                    r.line("array.mode"),
                    format!("expected on_curve or perturbed, got `{other}`"),
                ))
            }
        };

        let observable = match r.required("observable.kind", |s| Ok(s.to_string()))?.as_str() {
            "coin_step" => ObservableSpec::CoinStep,
            "cos" => ObservableSpec::Cos {
                freq: r.optional("observable.freq", 1, parse_u32)?,
            },
            "sin" => ObservableSpec::Sin {
                freq: r.optional("observable.freq", 1, parse_u32)?,
            },
            "cos_sin" => ObservableSpec::CosSin {
                freq: r.optional("observable.freq", 1, parse_u32)?,
            },
            "constant" => ObservableSpec::Constant {
                value: r.optional("observable.value", 1.0, parse_f64)?,
            },
            other => {
                return Err(invalid(
                    "observable.kind",
                    r.line("observable.kind"),
                    format!("expected coin_step, cos, sin, cos_sin or constant, got `{other}`"),
                ))
            }
        };

        let initial = match r.required("initial.kind", |s| Ok(s.to_string()))?.as_str() {
            "uniform" => InitialSpec::Uniform,
            "trig" => InitialSpec::Trig {
                amplitude: r.optional("initial.amplitude", 0.3, parse_f64)?,
                freq: r.optional("initial.freq", 1, parse_u32)?,
            },
            "lipschitz" => InitialSpec::Lipschitz {
                amplitude: r.optional("initial.amplitude", 0.3, parse_f64)?,
            },
            "inadmissible" => InitialSpec::Inadmissible {
                k: r.optional("initial.k", 3, parse_u64)?,
            },
            other => {
                return Err(invalid(
                    "initial.kind",
                    r.line("initial.kind"),
                    format!("expected uniform, trig, lipschitz or inadmissible, got `{other}`"),
                ))
            }
        };

        let centering = r.required("centering.kind", |s| match s {
            "lebesgue_mean" => Ok(CenteringSpec::LebesgueMean),
            "measure_mean" => Ok(CenteringSpec::MeasureMean),
            "explicit_zeta" => Ok(CenteringSpec::ExplicitZeta),
            "zero" => Ok(CenteringSpec::Zero),
            other => Err(format!(
                "expected lebesgue_mean, measure_mean, explicit_zeta or zero, got `{other}`"
            )),
        })?;

        let n_list = r.required("run.n_list", parse_count_list)?;
        let ensemble = r.required("run.ensemble", |s| {
            let v = parse_count(s)?;
            if v < MIN_ENSEMBLE {
                Err(format!("need at least {MIN_ENSEMBLE} members, got {v}"))
            } else {
                Ok(v)
            }
        })?;
        let seed = r.required("run.seed", parse_u64)?;
        let t_points = r.optional("run.t_points", 65, |s| {
            let v = parse_count(s)?;
            if v < 2 {
                Err("need at least 2 grid points".into())
            } else {
                Ok(v)
            }
        })?;
        let tol = Tolerances {
            ks: r.optional("tol.ks", 0.02, parse_positive)?,
            cov: r.optional("tol.cov", 0.03, parse_positive)?,
        };
        let output_dir = r.optional("output.dir", PathBuf::from("out").join(&name), |s| Ok(PathBuf::from(s)))?;
        let marginals = r.optional("output.marginals", MarginalFormat::None, |s| match s {
            "none" => Ok(MarginalFormat::None),
            "csv" => Ok(MarginalFormat::Csv),
            "binary" => Ok(MarginalFormat::Binary),
            other => Err(format!("expected none, csv or binary, got `{other}`")),
        })?;
        r.finish()?;

        let scenario = Self {
            name,
            lambda,
            a_star,
            degree,
            frequency,
            eta,
            jumps,
            pieces,
            array,
            observable,
            initial,
            centering,
            n_list,
            ensemble,
            seed,
            t_points,
            tol,
            output_dir,
            marginals,
        };
        if let Err((field, err)) = scenario.build() {
            let line = match field {
                "curve.pieces" => raw
                    .iter()
                    .filter(|(k, _)| pieces_index(k).is_some())
                    .map(|(_, e)| e.line)
                    .min()
                    .unwrap_or(0),
                f => raw.get(f).map_or(0, |e| e.line),
            };
            return Err(invalid(field, line, err.to_string()));
        }
        Ok(scenario)
    }

    /// The canonical text form; parsing it gives back an equal scenario.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("name", self.name.clone());
        put("model.lambda", fmt_f64(self.lambda));
        put("model.a_star", fmt_f64(self.a_star));
        put("curve.degree", self.degree.to_string());
        put("curve.frequency", self.frequency.to_string());
        put("curve.eta", fmt_f64(self.eta));
        if !self.jumps.is_empty() {
            put(
                "curve.jumps",
                self.jumps.iter().map(|&j| fmt_f64(j)).collect::<Vec<_>>().join(", "),
            );
        }
        for (i, p) in self.pieces.iter().enumerate() {
            put(&format!("curve.pieces[{i}].eps_expr"), p.to_string());
        }
        match self.array {
            ArrayModeSpec::OnCurve => put("array.mode", "on_curve".into()),
            ArrayModeSpec::Perturbed { scale } => {
                put("array.mode", "perturbed".into());
                put("array.scale", fmt_f64(scale));
            }
        }
        match self.observable {
            ObservableSpec::CoinStep => put("observable.kind", "coin_step".into()),
            ObservableSpec::Cos { freq } | ObservableSpec::Sin { freq } | ObservableSpec::CosSin { freq } => {
                let kind = match self.observable {
                    ObservableSpec::Cos { .. } => "cos",
                    ObservableSpec::Sin { .. } => "sin",
                    _ => "cos_sin",
                };
                put("observable.kind", kind.into());
                put("observable.freq", freq.to_string());
            }
            ObservableSpec::Constant { value } => {
                put("observable.kind", "constant".into());
                put("observable.value", fmt_f64(value));
            }
        }
        match self.initial {
            InitialSpec::Uniform => put("initial.kind", "uniform".into()),
            InitialSpec::Trig { amplitude, freq } => {
                put("initial.kind", "trig".into());
                put("initial.amplitude", fmt_f64(amplitude));
                put("initial.freq", freq.to_string());
            }
            InitialSpec::Lipschitz { amplitude } => {
                put("initial.kind", "lipschitz".into());
                put("initial.amplitude", fmt_f64(amplitude));
            }
            InitialSpec::Inadmissible { k } => {
                put("initial.kind", "inadmissible".into());
                put("initial.k", k.to_string());
            }
        }
        let centering = match self.centering {
            CenteringSpec::LebesgueMean => "lebesgue_mean",
            CenteringSpec::MeasureMean => "measure_mean",
            CenteringSpec::ExplicitZeta => "explicit_zeta",
            CenteringSpec::Zero => "zero",
        };
        put("centering.kind", centering.into());
        put(
            "run.n_list",
            self.n_list
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(", "),
        );
        put("run.ensemble", self.ensemble.to_string());
        put("run.seed", self.seed.to_string());
        put("run.t_points", self.t_points.to_string());
        put("tol.ks", fmt_f64(self.tol.ks));
        put("tol.cov", fmt_f64(self.tol.cov));
        put("output.dir", self.output_dir.display().to_string());
        let marginals = match self.marginals {
            MarginalFormat::None => "none",
            MarginalFormat::Csv => "csv",
            MarginalFormat::Binary => "binary",
        };
        put("output.marginals", marginals.into());
        s
    }

    pub fn t_grid(&self) -> Vec<f64> {
        uniform_grid(self.t_points)
    }

    /// Builds the array, observable and initial law. Only fails on a
    /// scenario that did not come through [`Scenario::from_raw`].
    pub fn model(&self) -> Result<Model, QdsError> {
        self.build().map_err(|(_, e)| e)
    }

    fn build(&self) -> Result<Model, (&'static str, QdsError)> {
        let params = ModelParams::new(self.lambda, self.a_star).map_err(|e| ("model.lambda", e))?;
        let amplitudes = self.pieces.iter().map(|p| vec![(self.frequency, p.clone())]).collect();
        let curve =
            MapCurve::new(self.degree, &self.jumps, amplitudes, self.eta, params).map_err(|e| ("curve.pieces", e))?;
        let spec = match self.array {
            ArrayModeSpec::OnCurve => ArraySpec::on_curve(curve),
            ArrayModeSpec::Perturbed { scale } => {
                let spec = ArraySpec::perturbed(curve, scale).map_err(|e| ("array.scale", e))?;
                // perturbations shrink with n, so the first rows are the hardest
                for n in 1..=4 {
                    for k in 1..=n {
                        spec.map(n, k).map_err(|e| ("array.scale", e))?;
                    }
                }
                spec
            }
        };
        let observable = match self.observable {
            ObservableSpec::CoinStep => Observable::coin_step(),
            ObservableSpec::Cos { freq } => Observable::cos(freq),
            ObservableSpec::Sin { freq } => Observable::sin(freq),
            ObservableSpec::CosSin { freq } => Observable::cos_sin(freq),
            ObservableSpec::Constant { value } => Observable::constant(value),
        };
        if let ObservableSpec::Cos { freq: 0 } | ObservableSpec::Sin { freq: 0 } | ObservableSpec::CosSin { freq: 0 } =
            self.observable
        {
            return Err((
                "observable.freq",
                QdsError::InvalidObservable("frequency must be at least 1".into()),
            ));
        }
        let initial = match self.initial {
            InitialSpec::Uniform => Initial::Density {
                density: Density::uniform(DEFAULT_CELLS),
                label: "uniform".into(),
            },
            InitialSpec::Trig { amplitude, freq } => {
                let a = amplitude.abs();
                if a >= 1.0 || freq == 0 {
                    return Err((
                        "initial.amplitude",
                        QdsError::InvalidDensity(format!(
                            "need |a| < 1 and frequency >= 1, got a = {amplitude}, frequency {freq}"
                        )),
                    ));
                }
                let w = TAU * freq as f64;
                let log_lip = (w * a / (1.0 - a)).max(-(1.0 - a).ln());
                let density = Density::from_fn(DEFAULT_CELLS, |x| 1.0 + amplitude * (w * x).cos())
                    .and_then(|d| d.certify(0.0, log_lip))
                    .map_err(|e| ("initial.amplitude", e))?;
                Initial::Density {
                    density,
                    label: "trig".into(),
                }
            }
            InitialSpec::Lipschitz { amplitude } => {
                let a = amplitude.abs();
                if a >= 1.0 {
                    return Err((
                        "initial.amplitude",
                        QdsError::InvalidDensity(format!("need |a| < 1, got {amplitude}")),
                    ));
                }
                let log_lip = (4.0 * a / (1.0 - a)).max(-(1.0 - a).ln());
                let density = Density::from_fn(DEFAULT_CELLS, |x| 1.0 + amplitude * (1.0 - 4.0 * (x - 0.5).abs()))
                    .and_then(|d| d.certify(0.0, log_lip))
                    .map_err(|e| ("initial.amplitude", e))?;
                Initial::Density {
                    density,
                    label: "lipschitz".into(),
                }
            }
            InitialSpec::Inadmissible { k } => {
                inadmissible_epsilon(k).map_err(|e| ("initial.k", e))?;
                if !spec.is_doubling() || self.observable != ObservableSpec::CoinStep {
                    return Err((
                        "initial.kind",
                        QdsError::InvalidArgument(
                            "the inadmissible measure needs the doubling array and the coin_step observable".into(),
                        ),
                    ));
                }
                Initial::Inadmissible { k }
            }
        };
        Ok(Model {
            spec,
            observable,
            initial,
        })
    }
}
