//! Run configuration: `key = value` files overlaid by command-line flags.
//!
//! Keys are the flag names without the leading dashes. A manifest written by
//! [`RunConfig::to_manifest`] parses back to the same configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Parser;

use crate::disorder::DisorderKind;
use crate::error::ConfigError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Carpet,
    Crossover,
    Qubit,
    BallisticCheck,
    Localization,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Carpet => "carpet",
            Experiment::Crossover => "crossover",
            Experiment::Qubit => "qubit",
            Experiment::BallisticCheck => "ballistic-check",
            Experiment::Localization => "localization",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Experiment::Carpet,
            Experiment::Crossover,
            Experiment::Qubit,
            Experiment::BallisticCheck,
            Experiment::Localization,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Delta,
    Uniform,
}

impl InitialState {
    pub fn name(self) -> &'static str {
        match self {
            InitialState::Delta => "delta",
            InitialState::Uniform => "uniform",
        }
    }
}

/// A numeric setting that may be left to the experiment to choose.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }

    fn render(self) -> String {
        match self {
            Auto::Auto => "auto".into(),
            Auto::Value(v) => format!("{v:?}"),
        }
    }
}

/// Fully resolved settings of one experiment run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n: usize,
    /// Disorder strengths; the crossover sweep takes several, others one.
    pub w: Vec<f64>,
    pub disorder: DisorderKind,
    pub amp: f64,
    pub dt: Auto,
    pub t_max: Auto,
    pub dtu: Auto,
    pub ensemble: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub log_scale: bool,
    pub initial: InitialState,
    pub expanding: bool,
    pub workers: usize,
    pub gamma: f64,
    pub samples: usize,
}

pub const KEYS: &[&str] = &[
    "N", "W", "disorder", "amp", "dt", "tmax", "dtu", "ensemble", "seed", "out", "log-scale", "initial",
    "expanding", "workers", "gamma", "samples",
];

/// Command line: `qwalk <experiment> [--flag value ...] [--config path]`.
#[derive(Parser, Debug, Default)]
#[command(name = "qwalk", version, about = "Continuous-time quantum walks with static and dynamic disorder")]
#[command(allow_negative_numbers = true)]
pub struct Cli {
    /// carpet | crossover | qubit | ballistic-check | localization
    pub experiment: String,
    /// `key = value` file; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain length (initial window when expanding)
    #[arg(long = "N")]
    pub n: Option<String>,
    /// Disorder strength; comma-separated list for crossover
    #[arg(long = "W")]
    pub w: Option<String>,
    /// clean | static | white | sin
    #[arg(long)]
    pub disorder: Option<String>,
    /// Amplitude of the sinusoidal disorder
    #[arg(long)]
    pub amp: Option<String>,
    /// Time step, or `auto`
    #[arg(long)]
    pub dt: Option<String>,
    /// Final time, or `auto`
    #[arg(long)]
    pub tmax: Option<String>,
    /// White-noise refresh interval, or `auto`
    #[arg(long)]
    pub dtu: Option<String>,
    /// Number of disorder realizations
    #[arg(long)]
    pub ensemble: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory
    #[arg(long)]
    pub out: Option<String>,
    /// Logarithmic grey scale for carpets
    #[arg(long = "log-scale")]
    pub log_scale: bool,
    /// delta | uniform
    #[arg(long)]
    pub initial: Option<String>,
    /// on | off
    #[arg(long)]
    pub expanding: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    pub workers: Option<String>,
    /// Qubit coupling
    #[arg(long)]
    pub gamma: Option<String>,
    /// Number of output samples
    #[arg(long)]
    pub samples: Option<String>,
}

impl Cli {
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = [
            ("N", &self.n),
            ("W", &self.w),
            ("disorder", &self.disorder),
            ("amp", &self.amp),
            ("dt", &self.dt),
            ("tmax", &self.tmax),
            ("dtu", &self.dtu),
            ("ensemble", &self.ensemble),
            ("seed", &self.seed),
            ("out", &self.out),
            ("initial", &self.initial),
            ("expanding", &self.expanding),
            ("workers", &self.workers),
            ("gamma", &self.gamma),
            ("samples", &self.samples),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
        .collect();
        if self.log_scale {
            v.push(("log-scale", "true".into()));
        }
        v
    }
}

/// Parses a `key = value` text. Blank lines and `#` comments are ignored.
pub fn parse_key_values(text: &str, path: &Path) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: i + 1,
        })?;
        let k = k.trim();
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey(k.to_string()));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Resolves command-line arguments (including the program name) into a
/// validated configuration.
pub fn parse_config<I, T>(args: I) -> Result<RunConfig, ConfigError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| ConfigError::Usage(e.to_string()))?;
    resolve(&cli)
}

/// Merges the optional config file with the flags of `cli`.
pub fn resolve(cli: &Cli) -> Result<RunConfig, ConfigError> {
    let experiment = Experiment::parse(&cli.experiment).ok_or_else(|| {
        ConfigError::Usage(format!(
            "unknown experiment `{}` (expected carpet, crossover, qubit, ballistic-check or localization)",
            cli.experiment
        ))
    })?;
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
                path: path.clone(),
                source,
            })?;
            parse_key_values(&text, path)?
        }
        None => BTreeMap::new(),
    };
    for (k, v) in cli.overrides() {
        raw.insert(k.to_string(), v);
    }
    RunConfig::from_map(experiment, &raw)
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        key: key.to_string(),
        value: value.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::Parse {
            key: key.to_string(),
            value: value.to_string(),
        }),
    }
}

fn parse_auto(key: &str, value: &str) -> Result<Auto, ConfigError> {
    if value == "auto" {
        Ok(Auto::Auto)
    } else {
        parse_num(key, value).map(Auto::Value)
    }
}

fn out_of_range(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::OutOfRange {
        key: key.to_string(),
        reason: reason.into(),
    }
}

impl RunConfig {
    /// Defaults of `experiment` before any file or flag is applied.
    pub fn defaults(experiment: Experiment) -> RunConfig {
        let base = RunConfig {
            experiment,
            n: 101,
            w: vec![0.0],
            disorder: DisorderKind::Clean,
            amp: 0.0,
            dt: Auto::Auto,
            t_max: Auto::Auto,
            dtu: Auto::Auto,
            ensemble: 1,
            seed: 0,
            out: PathBuf::from(format!("qwalk-{}", experiment.name())),
            log_scale: false,
            initial: InitialState::Delta,
            expanding: true,
            workers: 0,
            gamma: 1.0,
            samples: 200,
        };
        match experiment {
            Experiment::Carpet => RunConfig {
                t_max: Auto::Value(100.0),
                expanding: false,
                ..base
            },
            Experiment::Crossover => RunConfig {
                w: vec![2.0, 5.0, 10.0, 20.0],
                disorder: DisorderKind::DynamicWhite,
                ensemble: 32,
                samples: 40,
                ..base
            },
            Experiment::Qubit => RunConfig {
                w: vec![1.0],
                disorder: DisorderKind::DynamicWhite,
                dt: Auto::Value(0.002),
                dtu: Auto::Value(0.01),
                t_max: Auto::Value(10.0),
                ensemble: 1000,
                ..base
            },
            Experiment::BallisticCheck => RunConfig {
                t_max: Auto::Value(20.0),
                ..base
            },
            Experiment::Localization => RunConfig {
                w: vec![5.0],
                disorder: DisorderKind::StaticBox,
                t_max: Auto::Value(2000.0),
                ensemble: 32,
                ..base
            },
        }
    }

    /// Applies raw `key -> value` settings over the experiment defaults.
    pub fn from_map(experiment: Experiment, raw: &BTreeMap<String, String>) -> Result<RunConfig, ConfigError> {
        let mut c = RunConfig::defaults(experiment);
        for (k, v) in raw {
            let v = v.as_str();
            match k.as_str() {
                "N" => c.n = parse_num(k, v)?,
                "W" => {
                    c.w = v
                        .split(',')
                        .map(|s| parse_num(k, s.trim()))
                        .collect::<Result<_, _>>()?
                }
                "disorder" => {
                    c.disorder = DisorderKind::parse(v).ok_or_else(|| ConfigError::Parse {
                        key: k.clone(),
                        value: v.to_string(),
                    })?
                }
                "amp" => c.amp = parse_num(k, v)?,
                "dt" => c.dt = parse_auto(k, v)?,
                "tmax" => c.t_max = parse_auto(k, v)?,
                "dtu" => c.dtu = parse_auto(k, v)?,
                "ensemble" => c.ensemble = parse_num(k, v)?,
                "seed" => c.seed = parse_num(k, v)?,
                "out" => c.out = PathBuf::from(v),
                "log-scale" => c.log_scale = parse_bool(k, v)?,
                "initial" => {
                    c.initial = match v {
                        "delta" => InitialState::Delta,
                        "uniform" => InitialState::Uniform,
                        _ => {
                            return Err(ConfigError::Parse {
                                key: k.clone(),
                                value: v.to_string(),
                            })
                        }
                    }
                }
                "expanding" => c.expanding = parse_bool(k, v)?,
                "workers" => c.workers = parse_num(k, v)?,
                "gamma" => c.gamma = parse_num(k, v)?,
                "samples" => c.samples = parse_num(k, v)?,
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(out_of_range(key, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.n == 0 {
            return Err(out_of_range("N", "must be >= 1"));
        }
        if self.w.is_empty() {
            return Err(ConfigError::MissingKey("W".into()));
        }
        for &w in &self.w {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(out_of_range("W", format!("must be finite and >= 0, got {w}")));
            }
        }
        if self.experiment != Experiment::Crossover && self.w.len() != 1 {
            return Err(out_of_range("W", "only the crossover sweep takes a list"));
        }
        if !(self.amp >= 0.0 && self.amp.is_finite()) {
            return Err(out_of_range("amp", format!("must be finite and >= 0, got {}", self.amp)));
        }
        for (key, a) in [("dt", self.dt), ("tmax", self.t_max), ("dtu", self.dtu)] {
            if let Auto::Value(v) = a {
                positive(key, v)?;
            }
        }
        if self.ensemble == 0 {
            return Err(out_of_range("ensemble", "must be >= 1"));
        }
        if self.samples == 0 {
            return Err(out_of_range("samples", "must be >= 1"));
        }
        positive("gamma", self.gamma)?;
        if self.experiment == Experiment::Crossover {
            if self.disorder != DisorderKind::DynamicWhite {
                return Err(out_of_range("disorder", "the crossover sweep needs white-noise disorder"));
            }
            if self.ensemble < crate::observables::MIN_CROSSOVER_REALIZATIONS {
                return Err(out_of_range(
                    "ensemble",
                    format!("crossover fit needs at least {}", crate::observables::MIN_CROSSOVER_REALIZATIONS),
                ));
            }
        }
        if self.experiment == Experiment::Qubit && self.disorder != DisorderKind::DynamicWhite {
            return Err(out_of_range("disorder", "the qubit experiment uses white-noise disorder"));
        }
        if self.initial == InitialState::Uniform && self.expanding {
            return Err(out_of_range("expanding", "a uniform start fills a fixed chain; use --expanding off"));
        }
        Ok(())
    }

    /// `key = value` text that parses back to this configuration.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# qwalk {} {}", self.experiment.name(), env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "# experiment = {}", self.experiment.name());
        let w: Vec<String> = self.w.iter().map(|w| format!("{w:?}")).collect();
        let _ = writeln!(s, "N = {}", self.n);
        let _ = writeln!(s, "W = {}", w.join(","));
        let _ = writeln!(s, "disorder = {}", self.disorder.name());
        let _ = writeln!(s, "amp = {:?}", self.amp);
        let _ = writeln!(s, "dt = {}", self.dt.render());
        let _ = writeln!(s, "tmax = {}", self.t_max.render());
        let _ = writeln!(s, "dtu = {}", self.dtu.render());
        let _ = writeln!(s, "ensemble = {}", self.ensemble);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out = {}", self.out.display());
        let _ = writeln!(s, "log-scale = {}", self.log_scale);
        let _ = writeln!(s, "initial = {}", self.initial.name());
        let _ = writeln!(s, "expanding = {}", if self.expanding { "on" } else { "off" });
        let _ = writeln!(s, "workers = {}", self.workers);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "samples = {}", self.samples);
        s
    }
}
