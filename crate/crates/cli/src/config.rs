//! Versioned JSON experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use silt::simulation::Centering;
use silt::MultiIndex;

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub k: MultiIndex,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub m: Option<u32>,
    #[serde(default)]
    pub m_max: Option<u32>,
    /// Grid steps on `[0, 1]` for the full functional.
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub centering: Option<Centering>,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    /// Overrides the limiting variance used by the verdicts.
    #[serde(default)]
    pub sigma_sq_target: Option<f64>,
    #[serde(default)]
    pub eta: Option<EtaSection>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub out: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaSection {
    #[serde(default)]
    pub log: bool,
    #[serde(default = "default_eta_grid")]
    pub grid: usize,
    #[serde(default)]
    pub u_max: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance on the sample variance.
    #[serde(default = "default_variance_rel")]
    pub variance_rel: f64,
    /// Smallest accepted KS p-value.
    #[serde(default = "default_ks_p_min")]
    pub ks_p_min: f64,
    /// Relative tolerance on the fourth-moment ratio.
    #[serde(default = "default_fourth_ratio_rel")]
    pub fourth_ratio_rel: f64,
    /// Allowed distance of mean and skewness from zero, in standard errors.
    #[serde(default = "default_se_multiple")]
    pub se_multiple: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            variance_rel: default_variance_rel(),
            ks_p_min: default_ks_p_min(),
            fourth_ratio_rel: default_fourth_ratio_rel(),
            se_multiple: default_se_multiple(),
        }
    }
}

fn default_rel_tol() -> f64 {
    1e-6
}

fn default_eta_grid() -> usize {
    4
}

fn default_variance_rel() -> f64 {
    0.15
}

fn default_ks_p_min() -> f64 {
    0.01
}

fn default_fourth_ratio_rel() -> f64 {
    0.10
}

fn default_se_multiple() -> f64 {
    3.0
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(CliError::Usage(format!(
                "unsupported config version {}, expected {SCHEMA_VERSION}",
                cfg.version
            )));
        }
        Ok(cfg)
    }

    pub fn require<T: Clone>(&self, field: &Option<T>, name: &str) -> Result<T, CliError> {
        field.clone().ok_or_else(|| CliError::Usage(format!("config field `{name}` is required here")))
    }
}
