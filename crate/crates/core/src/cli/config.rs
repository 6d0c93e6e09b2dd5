use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analyze::{Tolerance, DEFAULT_JUMP_FACTOR};
use crate::exec::ExecConfig;
use crate::storage::DatasetConfig;
use crate::sweep::GridSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    Dataset(#[from] crate::storage::DatasetError),
    #[error("invalid exec settings: {0}")]
    Exec(#[from] crate::exec::ExecError),
    #[error("invalid grid: {0}")]
    Grid(#[from] crate::sweep::SweepError),
    #[error("invalid analysis settings: {0}")]
    Analyze(#[from] crate::analyze::AnalyzeError),
}

/// File names written by `all` inside the output directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputNames {
    pub costs: String,
    pub report: String,
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            costs: "costs.csv".to_string(),
            report: "report.json".to_string(),
        }
    }
}

/// Everything a pipeline run needs. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub exec: ExecConfig,
    pub grid: GridSpec,
    pub tolerance: Tolerance,
    pub jump_factor: f64,
    pub outputs: OutputNames,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetConfig::default(),
            exec: ExecConfig::default(),
            grid: GridSpec::default(),
            tolerance: Tolerance::default(),
            jump_factor: DEFAULT_JUMP_FACTOR,
            outputs: OutputNames::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dataset.validate()?;
        self.exec.validate()?;
        self.grid.validate(&self.dataset)?;
        self.tolerance.validate()?;
        if !(self.jump_factor.is_finite() && self.jump_factor > 1.0) {
            return Err(crate::analyze::AnalyzeError::InvalidJumpFactor(self.jump_factor).into());
        }
        Ok(())
    }
}

/// Parses and eagerly validates a JSON run config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = serde_json::from_str(text)?;
    config.validate()?;
    Ok(config)
}
