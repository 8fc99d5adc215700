//! Property suites behind `bohm2p check`, run without any ensemble.

use std::path::Path;

use bohm2p_core::checks::{default_check_models, run_check, CheckKind, CheckOutcome, CheckSettings};
use bohm2p_core::wavefunction::WaveModel;
use serde::{Deserialize, Serialize};

use crate::config::SCHEMA_VERSION;
use crate::CliError;

/// Random points per suite in `--fast` mode.
pub const FAST_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSuiteConfig {
    pub schema_version: u32,
    /// Defaults to one model per variant and composition.
    #[serde(default)]
    pub models: Option<Vec<WaveModel>>,
    /// Defaults to every suite.
    #[serde(default)]
    pub kinds: Option<Vec<CheckKind>>,
    #[serde(default)]
    pub settings: CheckSettings,
}

impl Default for CheckSuiteConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            models: None,
            kinds: None,
            settings: CheckSettings::default(),
        }
    }
}

impl CheckSuiteConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "invalid parameter `schema_version`: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        for m in self.models.iter().flatten() {
            m.validate().map_err(|e| CliError::Config(e.to_string()))?;
        }
        self.settings.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema_version: u32,
    pub settings: CheckSettings,
    pub results: Vec<CheckOutcome>,
    pub all_passed: bool,
}

pub fn run_suite(cfg: &CheckSuiteConfig, fast: bool) -> Result<CheckReport, CliError> {
    cfg.validate()?;
    let mut settings = cfg.settings;
    if fast {
        settings.points = settings.points.min(FAST_POINTS);
    }
    let models = cfg.models.clone().unwrap_or_else(default_check_models);
    let kinds = cfg.kinds.clone().unwrap_or_else(|| CheckKind::ALL.to_vec());
    let mut results = Vec::new();
    for m in &models {
        for k in &kinds {
            let outcome = run_check(*k, m, &settings).map_err(|e| CliError::Runtime {
                stage: "checks",
                message: e.to_string(),
            })?;
            results.extend(outcome);
        }
    }
    Ok(CheckReport {
        schema_version: SCHEMA_VERSION,
        settings,
        all_passed: results.iter().all(|r| r.passed),
        results,
    })
}
