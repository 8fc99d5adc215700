//! Scenario files: one JSON document describing a complete run.

use std::path::{Path, PathBuf};

use bohm2p_core::checks::{CheckKind, CheckSettings};
use bohm2p_core::dynamics::{predicted_coordinate_sum, IntegratorSettings};
use bohm2p_core::ensemble::SamplerSettings;
use bohm2p_core::statistics::Region;
use bohm2p_core::wavefunction::{ConfigPoint, WaveModel};
use bohm2p_core::Error;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub model: WaveModel,
    #[serde(default)]
    pub sampler: SamplerSettings,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    pub time_grid: TimeGrid,
    #[serde(default)]
    pub initial: InitialConditions,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub output: OutputSettings,
}

/// `n_times` equally spaced times from `t_start` to `t_end` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub n_times: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let n = self.n_times;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.t_end
                } else {
                    self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn contains(&self, t: f64) -> bool {
        self.times().iter().any(|&g| (g - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    fn values(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.lo],
            n => (0..n).map(|i| self.lo + (self.hi - self.lo) * i as f64 / (n - 1) as f64).collect(),
        }
    }
}

/// Where the initial configurations come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConditions {
    /// Draw `sampler.n_samples` configurations from `|Psi(t=0)|^2`.
    #[default]
    Sample,
    /// Cartesian grid over `x1` and `x2`; `y1` and `y2` fixed.
    Grid {
        x1: Axis,
        x2: Axis,
        #[serde(default)]
        y1: f64,
        #[serde(default)]
        y2: f64,
    },
    /// Explicit `[x1, y1, x2, y2]` rows (`[x1, x2]` for one-dimensional models).
    Points { points: Vec<Vec<f64>> },
}

impl InitialConditions {
    /// Explicit starting points at `t`, or `None` when they must be sampled.
    pub fn explicit(&self, model: &WaveModel, t: f64) -> Option<Vec<ConfigPoint>> {
        let d = model.dim();
        let make = |x1: f64, y1: f64, x2: f64, y2: f64| match d {
            1 => ConfigPoint::new([x1], [x2], t),
            _ => ConfigPoint::new([x1, y1], [x2, y2], t),
        };
        match self {
            InitialConditions::Sample => None,
            InitialConditions::Grid { x1, x2, y1, y2 } => Some(
                x1.values()
                    .into_iter()
                    .flat_map(|a| x2.values().into_iter().map(move |b| make(a, *y1, b, *y2)))
                    .collect(),
            ),
            InitialConditions::Points { points } => Some(
                points
                    .iter()
                    .map(|row| match row.len() {
                        2 => make(row[0], 0.0, row[1], 0.0),
                        _ => make(row[0], row[1], row[2], row[3]),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    /// No pair found and a quantum probability below `1/n`.
    Zero,
    /// At least one pair found and a positive quantum probability.
    Positive,
    #[default]
    Any,
}

/// A pass/fail check evaluated on the propagated ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Centre-of-mass constraint residual per completed trajectory.
    ConstraintResidual {
        #[serde(default = "default_residual")]
        max: f64,
        #[serde(default = "default_min_fraction")]
        min_fraction: f64,
    },
    /// Largest change of `x1` or `x2` along any completed trajectory.
    CoordinateConstancy {
        #[serde(default = "default_constancy")]
        max: f64,
    },
    /// KS distance of the `x1`, `x2` and `x1 + x2` marginals against quadrature.
    KsMarginals {
        /// Defaults to the first and last grid times.
        #[serde(default)]
        times: Option<Vec<f64>>,
        #[serde(default = "default_alpha")]
        alpha: f64,
    },
    /// Bohmian detection fraction against the quantum probability.
    DetectionAgreement {
        #[serde(default)]
        label: String,
        region1: Region,
        region2: Region,
        t: f64,
        #[serde(default = "default_standard_errors")]
        max_standard_errors: f64,
        #[serde(default)]
        expect: Expectation,
    },
    /// Particles never change order along `x`.
    NoOrderSwaps,
    /// Fraction of pairs with both particles on one side of `plane_x`.
    SameSideFraction {
        #[serde(default)]
        plane_x: f64,
        t: f64,
        max: f64,
    },
    /// Property suites on random configurations of the scenario's model.
    Properties {
        #[serde(default)]
        kinds: Option<Vec<CheckKind>>,
        #[serde(default)]
        settings: CheckSettings,
    },
}

fn default_residual() -> f64 {
    1e-6
}
fn default_min_fraction() -> f64 {
    0.99
}
fn default_constancy() -> f64 {
    1e-9
}
fn default_alpha() -> f64 {
    0.01
}
fn default_standard_errors() -> f64 {
    3.0
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::ConstraintResidual { .. } => "constraint_residual",
            CheckSpec::CoordinateConstancy { .. } => "coordinate_constancy",
            CheckSpec::KsMarginals { .. } => "ks_marginals",
            CheckSpec::DetectionAgreement { .. } => "detection_agreement",
            CheckSpec::NoOrderSwaps => "no_order_swaps",
            CheckSpec::SameSideFraction { .. } => "same_side_fraction",
            CheckSpec::Properties { .. } => "properties",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Overridden by `--out`.
    pub directory: Option<PathBuf>,
    pub trajectories: bool,
    pub marginals: bool,
    pub marginal_bins: usize,
    /// Defaults to the first and last grid times.
    pub marginal_times: Option<Vec<f64>>,
    pub crossing_bins: usize,
    /// Half-width of the slit bands, in units of `sigma0`, used to classify initial pairs.
    pub slit_band: f64,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self {
            directory: None,
            trajectories: true,
            marginals: true,
            marginal_bins: 40,
            marginal_times: None,
            crossing_bins: 20,
            slit_band: 3.0,
        }
    }
}

fn config_error(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn field_error(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid parameter `{field}`: {reason}"))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn first_time(&self) -> f64 {
        self.time_grid.t_start
    }

    pub fn last_time(&self) -> f64 {
        self.time_grid.t_end
    }

    pub fn marginal_times(&self) -> Vec<f64> {
        self.output
            .marginal_times
            .clone()
            .unwrap_or_else(|| vec![self.first_time(), self.last_time()])
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(field_error(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        self.model.validate().map_err(config_error)?;
        self.sampler.validate().map_err(config_error)?;
        self.integrator.validate().map_err(config_error)?;
        let g = &self.time_grid;
        if !(g.t_start.is_finite() && g.t_end.is_finite() && g.t_start >= 0.0) {
            return Err(field_error("time_grid", "times must be finite and t_start non-negative"));
        }
        if g.t_end <= g.t_start {
            return Err(field_error("time_grid.t_end", "must exceed t_start"));
        }
        if g.n_times < 2 {
            return Err(field_error("time_grid.n_times", "must be at least 2"));
        }
        match &self.initial {
            InitialConditions::Sample => {
                if !self.model.is_normalizable() {
                    return Err(field_error(
                        "initial",
                        format!("`{}` has no normalizable density; supply a grid or points", self.model.name()),
                    ));
                }
                if g.t_start != 0.0 {
                    return Err(field_error("time_grid.t_start", "sampled ensembles start at t = 0"));
                }
            }
            InitialConditions::Grid { x1, x2, y1, y2 } => {
                for (field, axis) in [("initial.x1", x1), ("initial.x2", x2)] {
                    if axis.n == 0 || !(axis.lo.is_finite() && axis.hi.is_finite()) || (axis.n > 1 && axis.hi <= axis.lo) {
                        return Err(field_error(field, "needs n >= 1 and finite lo < hi"));
                    }
                }
                if !(y1.is_finite() && y2.is_finite()) {
                    return Err(field_error("initial", "y1 and y2 must be finite"));
                }
            }
            InitialConditions::Points { points } => {
                if points.is_empty() {
                    return Err(field_error("initial.points", "must not be empty"));
                }
                let want = 2 * self.model.dim();
                for (i, row) in points.iter().enumerate() {
                    if !(row.len() == want || row.len() == 2) || row.iter().any(|v| !v.is_finite()) {
                        return Err(field_error(
                            &format!("initial.points[{i}]"),
                            format!("expected {want} finite coordinates"),
                        ));
                    }
                }
            }
        }
        let on_grid = |field: &str, t: f64| {
            if g.contains(t) {
                Ok(())
            } else {
                Err(field_error(field, format!("time {t} is not on the time grid")))
            }
        };
        if self.output.marginal_bins == 0 || self.output.crossing_bins == 0 {
            return Err(field_error("output", "bin counts must be positive"));
        }
        if !(self.output.slit_band.is_finite() && self.output.slit_band > 0.0) {
            return Err(field_error("output.slit_band", "must be positive"));
        }
        for &t in self.marginal_times().iter() {
            on_grid("output.marginal_times", t)?;
        }
        for (i, check) in self.checks.iter().enumerate() {
            let field = format!("checks[{i}]");
            let needs_density = matches!(check, CheckSpec::KsMarginals { .. } | CheckSpec::DetectionAgreement { .. });
            if needs_density && !self.model.is_normalizable() {
                return Err(field_error(
                    &field,
                    format!("`{}` has no normalizable density to compare against", self.model.name()),
                ));
            }
            match check {
                CheckSpec::ConstraintResidual { max, min_fraction } => {
                    if !(*max > 0.0) || !(0.0..=1.0).contains(min_fraction) {
                        return Err(field_error(&field, "needs max > 0 and min_fraction in [0, 1]"));
                    }
                    if predicted_coordinate_sum(&self.model, 0.0, 0.0, 0.0).is_err() {
                        return Err(field_error(
                            &field,
                            format!("no coordinate-sum prediction for `{}`", self.model.name()),
                        ));
                    }
                }
                CheckSpec::CoordinateConstancy { max } => {
                    if !(*max > 0.0) {
                        return Err(field_error(&field, "needs max > 0"));
                    }
                }
                CheckSpec::KsMarginals { times, alpha } => {
                    if !(*alpha > 0.0 && *alpha < 1.0) {
                        return Err(field_error(&format!("{field}.alpha"), "must lie in (0, 1)"));
                    }
                    for &t in times.as_deref().unwrap_or(&[]) {
                        on_grid(&format!("{field}.times"), t)?;
                    }
                }
                CheckSpec::DetectionAgreement {
                    region1,
                    region2,
                    t,
                    max_standard_errors,
                    ..
                } => {
                    region1.validate(&format!("{field}.region1")).map_err(config_error)?;
                    region2.validate(&format!("{field}.region2")).map_err(config_error)?;
                    if !(*max_standard_errors > 0.0) {
                        return Err(field_error(&format!("{field}.max_standard_errors"), "must be positive"));
                    }
                    on_grid(&format!("{field}.t"), *t)?;
                }
                CheckSpec::NoOrderSwaps => {}
                CheckSpec::SameSideFraction { t, max, plane_x } => {
                    if !(*max >= 0.0) || !plane_x.is_finite() {
                        return Err(field_error(&field, "needs max >= 0 and a finite plane_x"));
                    }
                    on_grid(&format!("{field}.t"), *t)?;
                }
                CheckSpec::Properties { settings, .. } => settings.validate().map_err(config_error)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "schema_version": 1,
            "model": {"variant": "gaussian_slit", "sigma0": 1.0, "a": 10.0, "composition": "symmetrized"},
            "time_grid": {"t_end": 2.0, "n_times": 5}
        })
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ScenarioConfig::from_json(&minimal().to_string()).unwrap();
        assert_eq!(cfg.initial, InitialConditions::Sample);
        assert_eq!(cfg.time_grid.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(cfg.sampler, SamplerSettings::default());
        assert_eq!(cfg.marginal_times(), vec![0.0, 2.0]);
    }

    #[test]
    fn negative_width_names_the_field() {
        let mut v = minimal();
        v["model"]["sigma0"] = serde_json::json!(-1.0);
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("sigma0")), "{err}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = minimal();
        v["sampler"] = serde_json::json!({"n_sample": 10});
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut v = minimal();
        v["colour"] = serde_json::json!("blue");
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn check_times_must_be_on_grid() {
        let mut v = minimal();
        v["checks"] = serde_json::json!([{"check": "same_side_fraction", "t": 0.7, "max": 0.1}]);
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("checks[0].t"), "{err}");
    }

    #[test]
    fn plane_waves_need_explicit_points() {
        let v = serde_json::json!({
            "schema_version": 1,
            "model": {"variant": "plane_wave_pair", "kx": 1.0, "ky": 1.0},
            "time_grid": {"t_end": 1.0, "n_times": 2}
        });
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn grid_initial_points() {
        let init = InitialConditions::Grid {
            x1: Axis { lo: 0.0, hi: 1.0, n: 3 },
            x2: Axis { lo: -1.0, hi: 0.0, n: 2 },
            y1: 0.5,
            y2: 0.0,
        };
        let m = WaveModel::plane_wave(1.0, 0.0).unwrap();
        let pts = init.explicit(&m, 0.0).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1].r1, vec![0.0, 0.5]);
        assert_eq!(pts[1].r2, vec![0.0, 0.0]);
    }

    #[test]
    fn checks_must_suit_the_model() {
        let grid = serde_json::json!({"kind": "grid", "x1": {"lo": 0.0, "hi": 1.0, "n": 2}, "x2": {"lo": 0.0, "hi": 1.0, "n": 2}});
        let mut v = serde_json::json!({
            "schema_version": 1,
            "model": {"variant": "plane_wave_pair", "kx": 1.0, "ky": 1.0},
            "time_grid": {"t_end": 1.0, "n_times": 2},
            "initial": grid,
            "checks": [{"check": "ks_marginals"}]
        });
        let err = ScenarioConfig::from_json(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("checks[0]"), "{err}");
        v["checks"] = serde_json::json!([{"check": "constraint_residual"}]);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut p = minimal();
        p["model"]["composition"] = "product".into();
        p["checks"] = serde_json::json!([{"check": "constraint_residual"}]);
        let err = ScenarioConfig::from_json(&p.to_string()).unwrap_err();
        assert!(err.to_string().contains("coordinate-sum"), "{err}");
    }
}
