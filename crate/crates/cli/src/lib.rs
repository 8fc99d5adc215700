//! Batch front end for two-particle Bohmian trajectory runs: scenario files,
//! the sample/propagate/statistics pipeline, and CSV/JSON output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod run;
pub mod scenarios;
pub mod suite;

use std::path::Path;

pub use bohm2p_core as core;
pub use bohm2p_core::checks::{CheckKind, CheckOutcome, CheckSettings};
pub use bohm2p_core::dynamics::{IntegratorSettings, Trajectory, TrajectoryStatus};
pub use bohm2p_core::ensemble::{Ensemble, SamplerSettings};
pub use bohm2p_core::statistics::{Coordinate, Interval, Region};
pub use bohm2p_core::wavefunction::{Composition, ConfigPoint, PhysicalConstants, Variant, WaveModel};
pub use config::ScenarioConfig;
pub use run::{run_scenario, RunOutcome, RunReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} failed: {message}")]
    Runtime { stage: &'static str, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime { .. } | CliError::Io(_) => 1,
        }
    }
}

/// Write `trajectories.csv`, `marginals.csv`, `report.json` and `timings.json` into `dir`.
pub fn write_run(dir: &Path, outcome: &RunOutcome) -> Result<(), CliError> {
    output::ensure_dir(dir)?;
    let out = &outcome.report.scenario.output;
    if out.trajectories {
        output::write_trajectories(&dir.join("trajectories.csv"), &outcome.ensemble)?;
    }
    if out.marginals {
        output::write_marginals(&dir.join("marginals.csv"), &outcome.marginals)?;
    }
    output::write_json(&dir.join("report.json"), &outcome.report)?;
    output::write_json(&dir.join("timings.json"), &outcome.timings)
}

/// A scenario given on the command line: a JSON file, or the name of a built-in.
pub fn load_scenario(arg: &str) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(arg);
    if !path.exists() && scenarios::builtin_json(arg).is_some() {
        return scenarios::builtin(arg);
    }
    ScenarioConfig::from_path(path)
}
