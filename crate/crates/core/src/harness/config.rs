//! Run configuration: flat `key = value` files with `#` comments, overridden
//! by command-line flags.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::bridge::{DEFAULT_MAX_ITER, DEFAULT_TOL, MIN_GRID};
use crate::costs::{CostError, CostKind, CostSpec};
use crate::partition::permanent::RYSER_MAX;
use crate::partition::{Method, PartitionError, TableSettings, BRUTE_CAP, DEFAULT_RYSER_CAP, MIN_MC_SAMPLES};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value `{value}` for `{key}`: {message}")]
    Value { key: String, value: String, message: String },
    #[error("grid m = {0} is below the minimum {MIN_GRID}")]
    GridTooSmall(usize),
    #[error("n range {n_min}..={n_max} is empty or starts at 0")]
    InvalidRange { n_min: usize, n_max: usize },
    #[error("n_max = {n_max} exceeds the {method} cap {cap}")]
    AboveCap { method: Method, n_max: usize, cap: usize },
    #[error("ryser cap {0} exceeds the hard ceiling {RYSER_MAX}")]
    RyserCap(usize),
    #[error("Monte-Carlo needs at least {MIN_MC_SAMPLES} samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub cost: CostKind,
    pub beta: f64,
    pub grid: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub method: Method,
    pub samples: usize,
    pub seed: u64,
    pub k: usize,
    /// Number of eigenvalues used by the series checks; all when `None`.
    pub l: Option<usize>,
    pub out: PathBuf,
    pub ryser_cap: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cost: CostKind::Quadratic,
            beta: 1.0,
            grid: 512,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            n_min: 4,
            n_max: 22,
            method: Method::Ryser,
            samples: 1_000_000,
            seed: 0,
            k: 20,
            l: None,
            out: PathBuf::from("out"),
            ryser_cap: DEFAULT_RYSER_CAP,
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_string(),
        value: value.to_string(),
        message: e.to_string(),
    })
}

impl RunConfig {
    /// Defaults overlaid with the contents of a config file.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut config = Self::default();
        config.apply_text(&text)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: idx + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one key. Keys match the long CLI flags, with `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key.replace('-', "_").as_str() {
            "cost" => self.cost = value.parse()?,
            "beta" => self.beta = parse_value(key, value)?,
            "grid" | "m" => self.grid = parse_value(key, value)?,
            "tol" => self.tol = parse_value(key, value)?,
            "max_iter" => self.max_iter = parse_value(key, value)?,
            "n_min" => self.n_min = parse_value(key, value)?,
            "n_max" => self.n_max = parse_value(key, value)?,
            "method" => {
                self.method = value.parse().map_err(|e: PartitionError| ConfigError::Value {
                    key: key.to_string(),
                    value: value.to_string(),
                    message: e.to_string(),
                })?
            }
            "samples" => self.samples = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "K" | "k" => self.k = parse_value(key, value)?,
            "L" | "l" => {
                self.l = match value {
                    "all" => None,
                    v => Some(parse_value(key, v)?),
                }
            }
            "out" => self.out = PathBuf::from(value),
            "ryser_cap" => self.ryser_cap = parse_value(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn cost_spec(&self) -> Result<CostSpec, ConfigError> {
        Ok(CostSpec::new(self.cost.clone(), self.beta)?)
    }

    pub fn table_settings(&self) -> TableSettings {
        TableSettings {
            method: self.method,
            ryser_cap: self.ryser_cap,
            samples: self.samples,
            seed: self.seed,
        }
    }

    /// Checks the invariants and normalizes `K` to an even number. Returns
    /// the warnings produced along the way.
    pub fn validate(&mut self) -> Result<Vec<String>, ConfigError> {
        let mut warnings = Vec::new();
        self.cost_spec()?;
        if self.grid < MIN_GRID {
            return Err(ConfigError::GridTooSmall(self.grid));
        }
        if !self.grid.is_power_of_two() {
            warnings.push(format!(
                "grid m = {} is not a power of two; reflections of grid nodes are no longer exact",
                self.grid
            ));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return Err(ConfigError::InvalidRange {
                n_min: self.n_min,
                n_max: self.n_max,
            });
        }
        if self.ryser_cap > RYSER_MAX {
            return Err(ConfigError::RyserCap(self.ryser_cap));
        }
        let cap = match self.method {
            Method::Ryser => Some(self.ryser_cap),
            Method::Brute => Some(BRUTE_CAP),
            Method::MonteCarlo => None,
        };
        if let Some(cap) = cap {
            if self.n_max > cap {
                return Err(ConfigError::AboveCap {
                    method: self.method,
                    n_max: self.n_max,
                    cap,
                });
            }
        }
        if self.method == Method::MonteCarlo && self.samples < MIN_MC_SAMPLES {
            return Err(ConfigError::TooFewSamples(self.samples));
        }
        if self.k % 2 == 1 {
            warnings.push(format!("K = {} is odd; rounded down to {}", self.k, self.k - 1));
            self.k -= 1;
        }
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok(warnings)
    }
}
