//! Experiment configuration: JSON with an explicit schema version.
//!
//! Exactly one of `topology` (a generator spec plus its seed) or `graph_file`
//! (path to a graph text file, resolved relative to the config file) selects
//! the network. `sigma2` picks the reading of the external algebraic
//! connectivity: one of the named conventions or an explicit numeric value.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use clusternet_core::{Sigma2Mode, TopologySpec};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    #[serde(flatten)]
    pub spec: TopologySpec,
    pub seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sigma2Choice {
    Named(String),
    Value(f64),
}

impl Sigma2Choice {
    pub fn to_mode(&self) -> Result<Sigma2Mode, CliError> {
        match self {
            Sigma2Choice::Named(name) => match name.as_str() {
                "full" => Ok(Sigma2Mode::Full),
                "nonzero" => Ok(Sigma2Mode::SmallestNonzero),
                "aggregate" => Ok(Sigma2Mode::Aggregate),
                other => Err(CliError::Config(format!(
                    "unknown sigma2 convention {other:?} (expected full, nonzero, aggregate or a number)"
                ))),
            },
            Sigma2Choice::Value(v) => {
                if v.is_finite() && *v >= 0.0 {
                    Ok(Sigma2Mode::Explicit(*v))
                } else {
                    Err(CliError::Config(format!("sigma2 value {v} must be finite and nonnegative")))
                }
            }
        }
    }
}

/// Parse a `--sigma2` flag value: a named convention or a number.
pub fn parse_sigma2_flag(raw: &str) -> Result<Sigma2Mode, CliError> {
    match raw {
        "full" | "nonzero" | "aggregate" => Sigma2Choice::Named(raw.to_string()).to_mode(),
        other => match other.parse::<f64>() {
            Ok(v) => Sigma2Choice::Value(v).to_mode(),
            Err(_) => Err(CliError::Config(format!(
                "unknown sigma2 convention {other:?} (expected full, nonzero, aggregate or a number)"
            ))),
        },
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub topology: Option<TopologyConfig>,
    #[serde(default)]
    pub graph_file: Option<PathBuf>,
    pub x0_seed: u64,
    pub t_end: f64,
    pub dt: f64,
    #[serde(default)]
    pub sigma2: Option<Sigma2Choice>,
    /// Optional override of the singular perturbation parameter used for the
    /// Lyapunov trace; defaults to the analysis value.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Structural checks beyond what serde enforces.
    pub fn check(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match (&self.topology, &self.graph_file) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "config must set exactly one of topology / graph_file, found both".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Config(
                    "config must set exactly one of topology / graph_file, found neither".into(),
                ))
            }
            _ => {}
        }
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(CliError::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !self.t_end.is_finite() || self.t_end <= self.dt {
            return Err(CliError::Config(format!(
                "t_end must exceed dt, got t_end = {}, dt = {}",
                self.t_end, self.dt
            )));
        }
        if let Some(eps) = self.epsilon {
            if !eps.is_finite() || eps < 0.0 {
                return Err(CliError::Config(format!(
                    "epsilon override {eps} must be finite and nonnegative"
                )));
            }
        }
        if let Some(choice) = &self.sigma2 {
            choice.to_mode()?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Config(format!("cannot parse config {}: {e}", path.display()))
        })?;
        config.check()?;
        Ok(config)
    }

    /// Graph file path resolved relative to the config location.
    pub fn resolved_graph_file(&self, config_path: &Path) -> Option<PathBuf> {
        self.graph_file.as_ref().map(|p| {
            if p.is_absolute() {
                p.clone()
            } else {
                config_path.parent().unwrap_or(Path::new(".")).join(p)
            }
        })
    }
}
