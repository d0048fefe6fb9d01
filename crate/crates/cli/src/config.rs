//! Run configuration.
//!
//! Grammar: one `key = value` per line, `#` starts a comment, blank lines
//! are ignored. Lists are comma separated. Unknown or repeated keys are
//! errors, and so is any key a named experiment pins.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use emlab_core::constants::StableParams;
use emlab_core::dynamics::{AssumptionAParams, DiffusionSpec, DriftSpec, RadialTerm};
use emlab_core::montecarlo::{EnsembleConfig, ModelSpec};
use emlab_core::noise::NoiseKind;
use emlab_core::theory::{PolynomialModel, RegimeInput};
use thiserror::Error;

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 20_240_601;
pub const TABLE_STEPS: [usize; 10] = [100, 105, 110, 115, 120, 125, 130, 135, 140, 145];
pub const FIG1_X0: [f64; 3] = [1.0, 5.0, 10.0];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("key `{key}`: cannot parse `{value}`")]
    Parse { key: String, value: String },
    #[error("key `{key}` is fixed by experiment `{experiment}`")]
    Pinned { key: String, experiment: String },
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] emlab_core::Error),
    #[error("cannot read {path}")]
    Io { path: PathBuf, source: std::io::Error },
}

type Result<T> = std::result::Result<T, ConfigError>;

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "output",
    "seed",
    "paths",
    "record_every",
    "betas",
    "quantiles",
    "trace_paths",
    "alpha",
    "beta",
    "dim",
    "horizon",
    "steps",
    "x0",
    "noise",
    "drift",
    "drift_terms",
    "diffusion",
    "diffusion_terms",
    "regime",
    "gamma",
    "lambda",
    "h",
    "k_heat",
    "n_max",
    "claim_paths",
    "draws",
];

/// Keys a named experiment leaves to the user.
fn allowed_keys(experiment: &str) -> Option<&'static [&'static str]> {
    const COMMON: &[&str] = &["experiment", "output", "seed", "paths", "record_every", "quantiles", "trace_paths"];
    Some(match experiment {
        "fig1" | "fig2" => COMMON,
        "table" => &["experiment", "output", "seed", "paths", "quantiles", "alpha", "x0"],
        "regime_check" | "event_check" | "custom" => KNOWN_KEYS,
        _ => return None,
    })
}

/// Parsed `key = value` pairs with their line numbers.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, usize)>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line: line_no, msg: "expected `key = value`".into() })?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || v.is_empty() {
                return Err(ConfigError::Syntax { line: line_no, msg: "empty key or value".into() });
            }
            if !KNOWN_KEYS.contains(&k) {
                return Err(ConfigError::UnknownKey(k.to_string()));
            }
            if entries.insert(k.to_string(), (v.to_string(), line_no)).is_some() {
                return Err(ConfigError::Syntax { line: line_no, msg: format!("key `{k}` given twice") });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.insert(key.to_string(), (value.to_string(), 0));
    }

    fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Pairs in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    fn value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| v.parse().map_err(|_| ConfigError::Parse { key: key.into(), value: v.into() }))
            .transpose()
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T> {
        self.value(key)?.ok_or(ConfigError::Missing(key))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse().map_err(|_| ConfigError::Parse { key: key.into(), value: v.into() }))
                    .collect()
            })
            .transpose()
    }
}

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    /// Brownian critical scheme, `T = 10`, `n = 10 000`, one cell per `x0`.
    Fig1,
    /// Brownian critical scheme, `T = 100`, `n = 10 000`.
    Fig2,
    /// Pareto critical sweep over `n = 100..=145`, `T = 100`, scalar start.
    Table {
        alpha: f64,
        x0: f64,
    },
    RegimeCheck(RegimeSettings),
    EventCheck(RegimeSettings),
    Custom(CustomSettings),
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Table { .. } => "table",
            Experiment::RegimeCheck(_) => "regime_check",
            Experiment::EventCheck(_) => "event_check",
            Experiment::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSettings {
    pub input: RegimeInput,
    /// Upper end of the smallest-valid-n scan.
    pub n_max: usize,
    pub claim_paths: usize,
    pub draws: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CustomSettings {
    pub model: ModelSpec,
    pub horizon: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output: PathBuf,
    pub seed: u64,
    pub ensemble: EnsembleConfig,
}

fn parse_terms(spec: &str) -> Result<Vec<RadialTerm>> {
    // `c p q; c p q` for c |x|^p log(1+|x|)^q
    spec.split(';')
        .map(|t| {
            let parts: Vec<&str> = t.split_whitespace().collect();
            let bad = || ConfigError::Parse { key: "terms".into(), value: t.trim().into() };
            match parts.as_slice() {
                [c, p, q] => Ok(RadialTerm::new(
                    c.parse().map_err(|_| bad())?,
                    p.parse().map_err(|_| bad())?,
                    q.parse().map_err(|_| bad())?,
                )),
                _ => Err(bad()),
            }
        })
        .collect()
}

fn parse_drift(raw: &RawConfig) -> Result<DriftSpec> {
    let spec = raw.get("drift").unwrap_or("critical");
    let bad = || ConfigError::Parse { key: "drift".into(), value: spec.into() };
    Ok(match spec.split_once(':') {
        None if spec == "critical" => DriftSpec::CriticalLog,
        None if spec == "linear" => DriftSpec::Linear,
        None if spec == "zero" => DriftSpec::Custom(vec![]),
        None if spec == "terms" => {
            DriftSpec::Custom(parse_terms(raw.get("drift_terms").ok_or(ConfigError::Missing("drift_terms"))?)?)
        }
        Some(("power", theta)) => DriftSpec::PowerLaw { theta: theta.trim().parse().map_err(|_| bad())? },
        _ => return Err(bad()),
    })
}

fn parse_diffusion(raw: &RawConfig) -> Result<DiffusionSpec> {
    let spec = raw.get("diffusion").unwrap_or("identity");
    let bad = || ConfigError::Parse { key: "diffusion".into(), value: spec.into() };
    Ok(match spec.split_once(':') {
        None if spec == "identity" => DiffusionSpec::Identity,
        None if spec == "terms" => DiffusionSpec::Radial(parse_terms(
            raw.get("diffusion_terms").ok_or(ConfigError::Missing("diffusion_terms"))?,
        )?),
        Some(("scalar", c)) => DiffusionSpec::Scalar(c.trim().parse().map_err(|_| bad())?),
        _ => return Err(bad()),
    })
}

fn parse_x0(raw: &RawConfig) -> Result<Vec<f64>> {
    let dim: Option<usize> = raw.value("dim")?;
    match (raw.list("x0")?, dim) {
        (Some(x0), Some(d)) if x0.len() != d => {
            Err(ConfigError::Invalid(format!("x0 has {} components but dim = {d}", x0.len())))
        }
        (Some(x0), _) => Ok(x0),
        (None, d) => Ok(vec![0.0; d.unwrap_or(1)]),
    }
}

fn parse_regime(raw: &RawConfig) -> Result<RegimeSettings> {
    let x0 = parse_x0(raw)?;
    let alpha: f64 = raw.required("alpha")?;
    let params = StableParams::heavy_tailed(x0.len(), alpha)?;
    let beta: f64 = raw.required("beta")?;
    let horizon: f64 = raw.required("horizon")?;
    let steps: usize = raw.required("steps")?;
    let pareto = match raw.get("noise").unwrap_or("pareto") {
        "pareto" => true,
        "stable" => false,
        other => return Err(ConfigError::Parse { key: "noise".into(), value: other.into() }),
    };
    let input = match raw.get("regime").unwrap_or("critical") {
        "critical" => RegimeInput::critical(pareto, params, beta, horizon, steps, x0),
        "polynomial" => {
            let growth = AssumptionAParams::new(raw.required("gamma")?, raw.required("lambda")?, raw.required("h")?)?;
            let model = PolynomialModel { drift: parse_drift(raw)?, diffusion: parse_diffusion(raw)?, growth };
            RegimeInput::polynomial(pareto, params, beta, horizon, steps, x0, model)
        }
        other => return Err(ConfigError::Parse { key: "regime".into(), value: other.into() }),
    }
    .with_k_heat(raw.value("k_heat")?.unwrap_or(1.0));
    Ok(RegimeSettings {
        input,
        n_max: raw.value("n_max")?.unwrap_or(10_000),
        claim_paths: raw.value("claim_paths")?.unwrap_or(1000),
        draws: raw.value("draws")?.unwrap_or(1_000_000),
    })
}

fn parse_custom(raw: &RawConfig) -> Result<CustomSettings> {
    let x0 = parse_x0(raw)?;
    let d = x0.len();
    let noise = match raw.get("noise").unwrap_or("gaussian") {
        "gaussian" => NoiseKind::Gaussian,
        "stable" => NoiseKind::IsotropicStable(StableParams::heavy_tailed(d, raw.required("alpha")?)?),
        "pareto" => NoiseKind::Pareto(StableParams::heavy_tailed(d, raw.required("alpha")?)?),
        other => return Err(ConfigError::Parse { key: "noise".into(), value: other.into() }),
    };
    let model = ModelSpec::new(parse_drift(raw)?, parse_diffusion(raw)?, noise, d)?;
    Ok(CustomSettings {
        model,
        horizon: raw.required("horizon")?,
        steps: raw.required("steps")?,
        x0,
        betas: raw.list("betas")?.unwrap_or_else(|| vec![2.0]),
    })
}

impl RunConfig {
    /// Validates the raw pairs and pins the parameters of named experiments.
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let name = raw.get("experiment").ok_or(ConfigError::Missing("experiment"))?;
        let allowed = allowed_keys(name).ok_or_else(|| ConfigError::UnknownExperiment(name.into()))?;
        if let Some(k) = raw.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(ConfigError::Pinned { key: k.clone(), experiment: name.into() });
        }
        let experiment = match name {
            "fig1" => Experiment::Fig1,
            "fig2" => Experiment::Fig2,
            "table" => Experiment::Table { alpha: raw.required("alpha")?, x0: raw.value("x0")?.unwrap_or(1.0) },
            "regime_check" => Experiment::RegimeCheck(parse_regime(raw)?),
            "event_check" => Experiment::EventCheck(parse_regime(raw)?),
            _ => Experiment::Custom(parse_custom(raw)?),
        };
        let betas = match &experiment {
            Experiment::Table { alpha, .. } => {
                StableParams::heavy_tailed(1, *alpha)?;
                vec![alpha / 8.0, alpha / 4.0, alpha / 2.0]
            }
            Experiment::Custom(c) => c.betas.clone(),
            _ => vec![2.0],
        };
        let record_every = match experiment {
            // only the final step of each cell is tabulated
            Experiment::Table { .. } => usize::MAX,
            _ => raw.value("record_every")?.unwrap_or(1),
        };
        let mut ensemble = EnsembleConfig::new(raw.value("paths")?.unwrap_or(DEFAULT_PATHS), record_every, betas)?;
        if let Some(q) = raw.list("quantiles")? {
            ensemble.quantiles = q;
        }
        ensemble.trace_paths = raw.value("trace_paths")?.unwrap_or(0);
        ensemble.validate()?;
        let cfg = RunConfig {
            experiment,
            output: PathBuf::from(raw.get("output").unwrap_or("out")),
            seed: raw.value("seed")?.unwrap_or(DEFAULT_SEED),
            ensemble,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Domain checks that do not need a simulation.
    pub fn validate(&self) -> Result<()> {
        match &self.experiment {
            Experiment::RegimeCheck(r) | Experiment::EventCheck(r) => {
                emlab_core::theory::certify_regime(&r.input)?;
            }
            Experiment::Custom(c) => {
                emlab_core::dynamics::EmConfig::new(c.horizon, c.steps, c.x0.clone(), self.seed)?;
            }
            _ => {}
        }
        Ok(())
    }
}
