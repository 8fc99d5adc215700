//! Sample → propagate → statistics pipeline behind `bohm2p run`.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::time::Instant;

use bohm2p_core::checks::{run_check, CheckKind, CheckOutcome};
use bohm2p_core::dynamics::constraint_residual;
use bohm2p_core::ensemble::{different_slit_filter, propagate, sample_initial, Ensemble, InitialSamples};
use bohm2p_core::statistics::{
    bohmian_detection, crossing_statistics, joint_probability, ks_critical_value, marginal_histogram, Coordinate,
    CrossingSummary, MarginalHistogram, Region,
};
use bohm2p_core::wavefunction::{ConfigPoint, Variant};
use log::info;
use serde::Serialize;
use serde_json::json;

use crate::config::{CheckSpec, Expectation, ScenarioConfig, SCHEMA_VERSION};
use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: &'static str,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub passed: bool,
    pub values: BTreeMap<&'static str, f64>,
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlitCounts {
    pub different_slits: usize,
    pub same_slit: usize,
    pub other: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleDiagnostics {
    pub n_trajectories: usize,
    pub completed: usize,
    pub aborted_count: usize,
    pub step_limit_count: usize,
    pub total_steps: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_slits: Option<SlitCounts>,
}

/// Everything written to `report.json`. Wall-clock timings are kept apart in
/// [`Timings`] so that the report is reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub scenario: ScenarioConfig,
    pub model: &'static str,
    pub ensemble: EnsembleDiagnostics,
    /// Pair positions relative to `x = 0` at the final time; absent when no pair completed.
    pub crossing: Option<CrossingSummary>,
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Timings {
    pub sampling_s: f64,
    pub propagation_s: f64,
    pub statistics_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: RunReport,
    pub ensemble: Ensemble,
    pub marginals: Vec<MarginalHistogram>,
    pub timings: Timings,
}

fn stage(name: &'static str) -> impl Fn(bohm2p_core::Error) -> CliError {
    move |e| CliError::Runtime {
        stage: name,
        message: e.to_string(),
    }
}

/// Initial configurations: explicit points from the config or samples from `|Psi(0)|^2`.
pub fn initial_points(cfg: &ScenarioConfig) -> Result<(Vec<ConfigPoint>, Option<f64>), CliError> {
    match cfg.initial.explicit(&cfg.model, cfg.first_time()) {
        Some(points) => Ok((points, None)),
        None => {
            let InitialSamples {
                points,
                acceptance_rate,
            } = sample_initial(&cfg.model, &cfg.sampler).map_err(stage("sampling"))?;
            Ok((points, Some(acceptance_rate)))
        }
    }
}

pub fn slit_counts(cfg: &ScenarioConfig, points: &[ConfigPoint]) -> Result<Option<SlitCounts>, CliError> {
    if !matches!(cfg.model.variant, Variant::GaussianSlit { .. }) {
        return Ok(None);
    }
    let parts = different_slit_filter(points, &cfg.model, cfg.output.slit_band).map_err(stage("sampling"))?;
    Ok(Some(SlitCounts {
        different_slits: parts.different_slits.len(),
        same_slit: parts.same_slit.len(),
        other: parts.other.len(),
    }))
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let (initial, acceptance_rate) = initial_points(cfg)?;
    let initial_slits = slit_counts(cfg, &initial)?;
    let sampled = Instant::now();
    info!("{} initial configurations", initial.len());

    let ensemble = propagate(&cfg.model, &initial, &cfg.time_grid.times(), &cfg.integrator)
        .map_err(stage("propagation"))?;
    let propagated = Instant::now();
    info!(
        "propagated {} pairs ({} completed)",
        ensemble.trajectories.len(),
        ensemble.completed_count()
    );

    let mut marginals = MarginalCache::default();
    if cfg.output.marginals && cfg.model.is_normalizable() && ensemble.completed_count() > 0 {
        for t in cfg.marginal_times() {
            for c in Coordinate::ALL {
                marginals.get(&ensemble, c, t, cfg.output.marginal_bins)?;
            }
        }
    }
    let checks = cfg
        .checks
        .iter()
        .map(|spec| evaluate_check(cfg, spec, &ensemble, &mut marginals))
        .collect::<Result<Vec<_>, _>>()?;
    let crossing = match ensemble.completed_count() {
        0 => None,
        _ => Some(
            crossing_statistics(&ensemble, 0.0, cfg.last_time(), cfg.output.crossing_bins)
                .map_err(stage("statistics"))?,
        ),
    };
    let done = Instant::now();

    let mut scenario = cfg.clone();
    scenario.output.directory = None;
    let all_passed = checks.iter().all(|c| c.passed);
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        scenario,
        model: cfg.model.name(),
        ensemble: EnsembleDiagnostics {
            n_trajectories: ensemble.trajectories.len(),
            completed: ensemble.completed_count(),
            aborted_count: ensemble.aborted_count,
            step_limit_count: ensemble.step_limit_count,
            total_steps: ensemble.trajectories.iter().map(|t| t.step_count).sum(),
            acceptance_rate,
            initial_slits,
        },
        crossing,
        checks,
        all_passed,
    };
    let secs = |a: Instant, b: Instant| (b - a).as_secs_f64();
    Ok(RunOutcome {
        report,
        ensemble,
        marginals: marginals.into_output(cfg),
        timings: Timings {
            sampling_s: secs(start, sampled),
            propagation_s: secs(sampled, propagated),
            statistics_s: secs(propagated, done),
            total_s: secs(start, done),
        },
    })
}

/// Marginal histograms keyed by grid index and coordinate, computed once.
#[derive(Default)]
struct MarginalCache {
    entries: BTreeMap<(usize, usize), MarginalHistogram>,
}

impl MarginalCache {
    fn get(&mut self, e: &Ensemble, c: Coordinate, t: f64, bins: usize) -> Result<&MarginalHistogram, CliError> {
        let i = e.grid_index(t).map_err(stage("statistics"))?;
        let j = Coordinate::ALL.iter().position(|x| *x == c).unwrap();
        match self.entries.entry((i, j)) {
            Entry::Occupied(o) => Ok(o.into_mut()),
            Entry::Vacant(v) => {
                let h = marginal_histogram(e, c, e.time_grid[i], bins).map_err(stage("statistics"))?;
                Ok(v.insert(h))
            }
        }
    }

    /// Histograms at the configured output times, in time then coordinate order.
    fn into_output(self, cfg: &ScenarioConfig) -> Vec<MarginalHistogram> {
        if !cfg.output.marginals {
            return Vec::new();
        }
        let times = cfg.marginal_times();
        self.entries
            .into_values()
            .filter(|h| times.iter().any(|&t| (t - h.t).abs() <= 1e-12 * t.abs().max(1.0)))
            .collect()
    }
}

fn values<const N: usize>(pairs: [(&'static str, f64); N]) -> BTreeMap<&'static str, f64> {
    pairs.into_iter().collect()
}

fn evaluate_check(
    cfg: &ScenarioConfig,
    spec: &CheckSpec,
    e: &Ensemble,
    marginals: &mut MarginalCache,
) -> Result<CheckResult, CliError> {
    let statistics = stage("statistics");
    let completed: Vec<_> = e.completed().collect();
    let n = completed.len();
    let mut result = CheckResult {
        check: spec.name(),
        label: String::new(),
        passed: false,
        values: BTreeMap::new(),
        details: serde_json::Value::Null,
    };
    match spec {
        CheckSpec::ConstraintResidual { max, min_fraction } => {
            let mut residuals = completed
                .iter()
                .map(|t| constraint_residual(&e.model, t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(&statistics)?;
            residuals.sort_by(f64::total_cmp);
            let within = residuals.iter().filter(|r| **r < *max).count();
            let fraction = if n == 0 { 0.0 } else { within as f64 / n as f64 };
            result.passed = n > 0 && fraction >= *min_fraction;
            result.values = values([
                ("completed", n as f64),
                ("fraction_within", fraction),
                ("max_residual", residuals.last().copied().unwrap_or(0.0)),
                ("median_residual", residuals.get(n / 2).copied().unwrap_or(0.0)),
                ("threshold", *max),
                ("min_fraction", *min_fraction),
            ]);
        }
        CheckSpec::CoordinateConstancy { max } => {
            let worst = completed
                .iter()
                .flat_map(|t| {
                    let first = t.first();
                    t.points
                        .iter()
                        .map(move |p| (p.r1[0] - first.r1[0]).abs().max((p.r2[0] - first.r2[0]).abs()))
                })
                .fold(0.0f64, f64::max);
            result.passed = n > 0 && worst < *max;
            result.values = values([
                ("completed", n as f64),
                ("aborted", e.aborted_count as f64),
                ("max_abs_change", worst),
                ("threshold", *max),
            ]);
        }
        CheckSpec::KsMarginals { times, alpha } => {
            let times = times
                .clone()
                .unwrap_or_else(|| vec![cfg.first_time(), cfg.last_time()]);
            let mut rows = Vec::new();
            let mut worst_ratio = 0.0f64;
            for t in times {
                for c in Coordinate::ALL {
                    let h = marginals.get(e, c, t, cfg.output.marginal_bins)?;
                    let critical = ks_critical_value(h.n, *alpha);
                    worst_ratio = worst_ratio.max(h.ks_distance / critical);
                    rows.push(json!({
                        "coordinate": c.name(),
                        "t": h.t,
                        "n": h.n,
                        "ks_distance": h.ks_distance,
                        "critical_value": critical,
                        "passed": h.ks_distance < critical,
                    }));
                }
            }
            result.passed = n > 0 && worst_ratio < 1.0;
            result.values = values([("alpha", *alpha), ("max_distance_over_critical", worst_ratio)]);
            result.details = serde_json::Value::Array(rows);
        }
        CheckSpec::DetectionAgreement {
            label,
            region1,
            region2,
            t,
            max_standard_errors,
            expect,
        } => {
            let r = bohmian_detection(e, region1, region2, *t).map_err(&statistics)?;
            let deviation = r.deviation_in_standard_errors();
            let expectation_met = match expect {
                Expectation::Zero => r.bohmian_fraction == 0.0 && r.quantum_probability < 1.0 / r.n_effective as f64,
                Expectation::Positive => r.bohmian_fraction > 0.0 && r.quantum_probability > 0.0,
                Expectation::Any => true,
            };
            result.label = label.clone();
            result.passed = deviation <= *max_standard_errors && expectation_met;
            result.values = values([
                ("t", *t),
                ("quantum_probability", r.quantum_probability),
                ("bohmian_fraction", r.bohmian_fraction),
                ("mc_standard_error", r.mc_standard_error),
                ("deviation_in_standard_errors", deviation),
                ("n_effective", r.n_effective as f64),
                ("max_standard_errors", *max_standard_errors),
            ]);
            result.details = json!({ "expect": expect, "expectation_met": expectation_met, "report": r });
        }
        CheckSpec::NoOrderSwaps => {
            let swaps = completed
                .iter()
                .filter(|t| {
                    let order = (t.first().r1[0] - t.first().r2[0]).signum();
                    t.points.iter().any(|p| {
                        let d = p.r1[0] - p.r2[0];
                        d == 0.0 || d.signum() != order
                    })
                })
                .count();
            result.passed = n > 0 && swaps == 0;
            result.values = values([("completed", n as f64), ("pairs_with_order_swap", swaps as f64)]);
        }
        CheckSpec::SameSideFraction { plane_x, t, max } => {
            let s = crossing_statistics(e, *plane_x, *t, cfg.output.crossing_bins).map_err(&statistics)?;
            let fraction = s.same_side_fraction();
            result.passed = fraction <= *max;
            result.values = values([
                ("t", *t),
                ("plane_x", *plane_x),
                ("same_side_fraction", fraction),
                ("both_above", s.both_above as f64),
                ("both_below", s.both_below as f64),
                ("threshold", *max),
            ]);
            if e.model.is_normalizable() {
                let above = Region::x_above(*plane_x);
                let below = Region::x_below(*plane_x);
                let q = joint_probability(&e.model, &above, &above, *t).map_err(&statistics)?
                    + joint_probability(&e.model, &below, &below, *t).map_err(&statistics)?;
                result.values.insert("quantum_same_side_probability", q);
            }
        }
        CheckSpec::Properties { kinds, settings } => {
            let kinds = kinds.clone().unwrap_or_else(|| CheckKind::ALL.to_vec());
            let outcomes: Vec<CheckOutcome> = kinds
                .iter()
                .filter_map(|k| run_check(*k, &e.model, settings).transpose())
                .collect::<Result<_, _>>()
                .map_err(stage("checks"))?;
            result.passed = outcomes.iter().all(|o| o.passed);
            result.values = values([("suites", outcomes.len() as f64)]);
            result.details = serde_json::to_value(&outcomes).expect("check outcomes serialize");
        }
    }
    Ok(result)
}
