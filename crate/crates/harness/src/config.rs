//! Experiment configuration: a flat TOML file, presets, and CLI overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ordsum::estimators::{EstimatorKind, DEFAULT_BISECT_TOL};
use ordsum::rqmc::DEFAULT_REPLICATES;
use ordsum::{DistributionSpec, IsWeights, OrderStatSumProblem};
use serde::Deserialize;

use crate::error::{HarnessError, Result};

pub const DEFAULT_SEED: u64 = 1;

const PRESETS: [(&str, &str); 9] = [
    ("table1", include_str!("../presets/table1.toml")),
    ("table2", include_str!("../presets/table2.toml")),
    ("table3", include_str!("../presets/table3.toml")),
    ("table4", include_str!("../presets/table4.toml")),
    ("table5", include_str!("../presets/table5.toml")),
    ("table6", include_str!("../presets/table6.toml")),
    ("table7", include_str!("../presets/table7.toml")),
    ("table8", include_str!("../presets/table8.toml")),
    ("fig1", include_str!("../presets/fig1.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(HarnessError::config(
                "format",
                format!("expected csv or jsonl, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Jsonl => "jsonl",
        })
    }
}

/// One layer of settings. Files, presets and command-line flags each produce
/// a layer; later layers win field by field.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub dist: Option<String>,
    pub n: Option<usize>,
    pub l: Option<usize>,
    pub thresholds: Option<Vec<f64>>,
    pub estimators: Option<Vec<String>>,
    pub samples: Option<u64>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub weights: Option<Vec<f64>>,
    pub bisect_tol: Option<f64>,
    pub grid: Option<Vec<u32>>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub timing: Option<bool>,
}

macro_rules! overlay {
    ($base:ident, $top:ident, $($field:ident),*) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigLayer {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| HarnessError::Format(format!("config: {}", e.message())))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
    }

    /// A preset name such as `table2`, or a path to a config file.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match preset_source(name_or_path) {
            Some(src) => Self::parse(src),
            None if Path::new(name_or_path).exists() => Self::read(Path::new(name_or_path)),
            None => Err(HarnessError::config(
                "config",
                format!(
                    "`{name_or_path}` is neither a preset ({}) nor an existing file",
                    preset_names().collect::<Vec<_>>().join(", ")
                ),
            )),
        }
    }

    pub fn overlay(mut self, top: ConfigLayer) -> Self {
        overlay!(
            self, top, dist, n, l, thresholds, estimators, samples, replicates, seed, weights, bisect_tol, grid, out,
            format, timing
        );
        self
    }
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dist: DistributionSpec,
    pub n: usize,
    pub l: usize,
    pub thresholds: Vec<f64>,
    pub estimators: Vec<EstimatorKind>,
    /// Samples per cell; points per replicate for `rqmc-cmc`.
    pub samples: u64,
    pub replicates: usize,
    pub seed: u64,
    /// Order-statistic weights for `weibull-is`.
    pub weights: Option<IsWeights>,
    pub bisect_tol: f64,
    /// Points-per-replicate grid for the convergence sweep.
    pub grid: Vec<u32>,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Record wall-clock times in the output; off by default so output is reproducible.
    pub timing: bool,
}

fn required<T>(value: Option<T>, field: &'static str) -> Result<T> {
    value.ok_or_else(|| HarnessError::config(field, "missing"))
}

impl ExperimentConfig {
    pub fn from_layer(layer: ConfigLayer) -> Result<Self> {
        let dist: DistributionSpec = required(layer.dist, "dist")?
            .parse()
            .map_err(|e: ordsum::Error| HarnessError::config("dist", e.to_string()))?;
        let estimators = required(layer.estimators, "estimators")?
            .iter()
            .map(|s| s.parse())
            .collect::<ordsum::Result<Vec<EstimatorKind>>>()
            .map_err(|e| HarnessError::config("estimators", e.to_string()))?;
        let weights = layer
            .weights
            .map(IsWeights::new)
            .transpose()
            .map_err(|e| HarnessError::config("weights", e.to_string()))?;
        let format = match layer.format {
            Some(f) => f.parse()?,
            None => Format::default(),
        };
        let config = Self {
            dist,
            n: required(layer.n, "n")?,
            l: required(layer.l, "l")?,
            thresholds: required(layer.thresholds, "thresholds")?,
            estimators,
            samples: required(layer.samples, "samples")?,
            replicates: layer.replicates.unwrap_or(DEFAULT_REPLICATES),
            seed: layer.seed.unwrap_or(DEFAULT_SEED),
            weights,
            bisect_tol: layer.bisect_tol.unwrap_or(DEFAULT_BISECT_TOL),
            grid: layer.grid.unwrap_or_default(),
            out: layer.out,
            format,
            timing: layer.timing.unwrap_or(false),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn problem(&self, threshold: f64) -> Result<OrderStatSumProblem> {
        OrderStatSumProblem::new(self.n, self.l, threshold, self.dist)
            .map_err(|e| HarnessError::config("n, l", e.to_string()))
    }

    /// Checks every field and every `(threshold, estimator)` cell without sampling.
    pub fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(HarnessError::config("thresholds", "at least one threshold is required"));
        }
        if self.estimators.is_empty() {
            return Err(HarnessError::config("estimators", "at least one estimator is required"));
        }
        if self.samples == 0 {
            return Err(HarnessError::config("samples", "must be at least 1"));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(HarnessError::config("bisect_tol", "must be positive"));
        }
        if let Some(w) = &self.weights {
            if w.len() != self.l {
                return Err(HarnessError::config(
                    "weights",
                    format!("expected {} weights, got {}", self.l, w.len()),
                ));
            }
        }
        for &t in &self.thresholds {
            if !(t > 0.0 && t.is_finite()) {
                return Err(HarnessError::config(
                    "thresholds",
                    format!("thresholds must be positive, got {t}"),
                ));
            }
            let problem = self.problem(t)?;
            for kind in &self.estimators {
                kind.check_compatible(&problem)
                    .map_err(|e| HarnessError::config("estimators", format!("{kind} at gamma_th={t}: {e}")))?;
            }
        }
        if self.estimators.contains(&EstimatorKind::RqmcCmc) {
            self.rqmc_plan(self.samples)?;
        }
        Ok(())
    }

    pub(crate) fn rqmc_plan(&self, points: u64) -> Result<ordsum::rqmc::RqmcPlan> {
        let points = u32::try_from(points).map_err(|_| HarnessError::config("samples", "too many RQMC points"))?;
        ordsum::rqmc::RqmcPlan::new(points, self.replicates, self.n, self.seed)
            .map_err(|e| HarnessError::config("samples", e.to_string()))
    }
}
