//! Scenario configs compiled into the binary.

use crate::config::ScenarioConfig;
use crate::CliError;

pub const BUILTIN: &[(&str, &str)] = &[
    ("gaussian-different-slits", include_str!("../scenarios/gaussian-different-slits.json")),
    ("plane-wave-grid", include_str!("../scenarios/plane-wave-grid.json")),
    ("oscillator-pair", include_str!("../scenarios/oscillator-pair.json")),
    ("gaussian-product-slits", include_str!("../scenarios/gaussian-product-slits.json")),
];

pub fn builtin_json(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, json)| *json)
}

pub fn builtin(name: &str) -> Result<ScenarioConfig, CliError> {
    let json = builtin_json(name).ok_or_else(|| CliError::Config(format!("no built-in scenario named `{name}`")))?;
    ScenarioConfig::from_json(json)
}
