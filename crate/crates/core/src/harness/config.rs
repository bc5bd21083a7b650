//! Flat `key = value` experiment configuration.

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::zero::HybridConfig;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    TrapKv,
    Exact,
    UeBound,
    UeFree,
    Hybrid,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::TrapKv,
        Method::Exact,
        Method::UeBound,
        Method::UeFree,
        Method::Hybrid,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::TrapKv => "trap-kv",
            Method::Exact => "exact",
            Method::UeBound => "ue-bound",
            Method::UeFree => "ue-free",
            Method::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Method::ALL.iter().map(|m| m.name()).collect();
                Error::config("method", format!("unknown method `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

/// Estimator applied to the weights of the unbiased-estimator methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightEstimator {
    /// Sample mean.
    Mean,
    /// Ratio of payoff weights to unit weights.
    Ratio,
}

/// Control-variate usage for the trapezoidal and hybrid methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ControlChoice {
    None,
    Fixed(f64),
    Fitted,
}

/// A pricing run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub method: Method,
    pub params: ModelParams,
    pub samples: u64,
    /// Time steps of the trapezoidal grid.
    pub steps: usize,
    pub hybrid: HybridConfig,
    pub estimator: WeightEstimator,
    pub control: ControlChoice,
    pub seed: u64,
    pub workers: usize,
    pub csv: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            method: Method::Exact,
            params: ModelParams::weighted_benchmark(),
            samples: 100_000,
            steps: 50,
            hybrid: HybridConfig::default(),
            estimator: WeightEstimator::Mean,
            control: ControlChoice::Fixed(1.0),
            seed: 42,
            workers: 1,
            csv: None,
        }
    }
}

/// Keys accepted in configuration files and as overrides.
pub const KEYS: &[&str] = &[
    "preset", "method", "spot", "rate", "dividend", "vol", "maturity", "alpha", "beta", "strike",
    "samples", "steps", "levels", "eta", "c_p", "estimator", "control", "seed", "workers", "csv",
];

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

impl ExperimentConfig {
    /// Parse a configuration text, starting from the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at_line = |e: Error| match e {
                Error::Config { field, message, .. } => Error::Config {
                    line: Some(i + 1),
                    field,
                    message,
                },
                other => other,
            };
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: Some(i + 1),
                field: None,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim()).map_err(at_line)?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            line: None,
            field: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        Self::parse(&text)
    }

    /// Set one field from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key {
            "preset" => {
                *p = match value {
                    "weighted" => ModelParams::weighted_benchmark(),
                    "asian" => ModelParams::asian_benchmark(),
                    _ => {
                        return Err(Error::config(
                            key,
                            format!("unknown preset `{value}`; expected weighted or asian"),
                        ))
                    }
                }
            }
            "method" => self.method = value.parse()?,
            "spot" => p.spot = parse_num(key, value)?,
            "rate" => p.rate = parse_num(key, value)?,
            "dividend" => p.dividend = parse_num(key, value)?,
            "vol" => p.vol = parse_num(key, value)?,
            "maturity" => p.maturity = parse_num(key, value)?,
            "alpha" => p.alpha = parse_num(key, value)?,
            "beta" => p.beta = parse_num(key, value)?,
            "strike" => p.strike = parse_num(key, value)?,
            "samples" => self.samples = parse_num(key, value)?,
            "steps" => self.steps = parse_num(key, value)?,
            "levels" => self.hybrid.levels = parse_num(key, value)?,
            "eta" => self.hybrid.eta = parse_num(key, value)?,
            "c_p" => self.hybrid.c_p = parse_num(key, value)?,
            "estimator" => {
                self.estimator = match value {
                    "mean" => WeightEstimator::Mean,
                    "ratio" => WeightEstimator::Ratio,
                    _ => return Err(Error::config(key, format!("expected mean or ratio, got `{value}`"))),
                }
            }
            "control" => {
                self.control = match value {
                    "none" => ControlChoice::None,
                    "fitted" => ControlChoice::Fitted,
                    v => ControlChoice::Fixed(parse_num(key, v).map_err(|_| {
                        Error::config(key, format!("expected none, fitted or a number, got `{v}`"))
                    })?),
                }
            }
            "seed" => self.seed = parse_num(key, value)?,
            "workers" => self.workers = parse_num(key, value)?,
            "csv" => self.csv = Some(PathBuf::from(value)),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// Check parameter ranges and method-specific requirements.
    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        p.validate()?;
        for (name, v) in [("rate", p.rate), ("dividend", p.dividend)] {
            if v < 0.0 {
                return Err(Error::config(name, "must be >= 0"));
            }
        }
        if self.samples < 2 {
            return Err(Error::config("samples", "need at least 2 samples"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "need at least one worker"));
        }
        match self.method {
            Method::TrapKv => {
                if self.steps == 0 {
                    return Err(Error::config("steps", "need at least one time step"));
                }
            }
            Method::Exact | Method::UeBound | Method::UeFree => {
                if !(p.alpha > 0.0) {
                    return Err(Error::config("alpha", format!("method {} needs alpha > 0", self.method)));
                }
            }
            Method::Hybrid => {
                if p.alpha != 0.0 {
                    return Err(Error::config("alpha", "method hybrid needs alpha = 0"));
                }
                self.hybrid.validate()?;
            }
        }
        Ok(())
    }
}
