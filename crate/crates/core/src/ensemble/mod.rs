//! Seeded ensembles: initial positions drawn from `|Psi(t=0)|^2` and
//! propagated along the guidance field.
//!
//! Sampling runs independent Metropolis chains, one per block of
//! `samples_per_chain` points. Chain `i` draws from a ChaCha8 stream `i`
//! keyed by the configured seed, so the output depends only on the seed and
//! never on how chains are scheduled across threads.

pub mod metropolis;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{run_sampled, IntegratorSettings, Trajectory, TrajectoryStatus};
use crate::error::{invalid, Error, Result};
use crate::wavefunction::{Composition, ConfigPoint, Variant, WaveFunction, WaveModel};
use metropolis::{run_chain, ChainSettings, Involution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSettings {
    pub n_samples: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub thinning: usize,
    /// Random-walk step; defaults to the model's packet width.
    pub proposal_scale: Option<f64>,
    pub samples_per_chain: usize,
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            n_samples: 1000,
            seed: 0,
            burn_in: 5000,
            thinning: 20,
            proposal_scale: None,
            samples_per_chain: 250,
        }
    }
}

impl SamplerSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(invalid("sampler.n_samples", "must be positive"));
        }
        if self.thinning == 0 {
            return Err(invalid("sampler.thinning", "must be at least 1"));
        }
        if self.samples_per_chain == 0 {
            return Err(invalid("sampler.samples_per_chain", "must be positive"));
        }
        if let Some(s) = self.proposal_scale {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("sampler.proposal_scale", format!("must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitialSamples {
    pub points: Vec<ConfigPoint>,
    pub acceptance_rate: f64,
}

/// Propagated trajectories sharing one model and one sampling grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub model: WaveModel,
    pub trajectories: Vec<Trajectory>,
    pub time_grid: Vec<f64>,
    pub seed: Option<u64>,
    pub aborted_count: usize,
    pub step_limit_count: usize,
}

impl Ensemble {
    pub fn completed(&self) -> impl Iterator<Item = &Trajectory> {
        self.trajectories.iter().filter(|t| t.is_completed())
    }

    pub fn completed_count(&self) -> usize {
        self.completed().count()
    }

    /// Index of `t` on the sampling grid.
    pub fn grid_index(&self, t: f64) -> Result<usize> {
        self.time_grid
            .iter()
            .position(|&g| (g - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or(Error::TimeNotOnGrid(t))
    }

    /// Positions of every completed pair at grid time `t`.
    pub fn positions_at(&self, t: f64) -> Result<Vec<&ConfigPoint>> {
        let i = self.grid_index(t)?;
        Ok(self.completed().map(|traj| &traj.points[i]).collect())
    }
}

fn exchange(x: [f64; 2]) -> [f64; 2] {
    [x[1], x[0]]
}

fn reflect_both(x: [f64; 2]) -> [f64; 2] {
    [-x[0], -x[1]]
}

fn reflect_first(x: [f64; 2]) -> [f64; 2] {
    [-x[0], x[1]]
}

fn reflect_second(x: [f64; 2]) -> [f64; 2] {
    [x[0], -x[1]]
}

/// Symmetries of `|Psi|^2` restricted to `(x1, x2)`.
fn symmetry_moves(model: &WaveModel) -> Vec<Involution<2>> {
    let mut moves: Vec<Involution<2>> = vec![exchange, reflect_both];
    if let Variant::GaussianSlit {
        composition: Composition::Product,
        ..
    } = model.variant
    {
        moves.push(reflect_first);
        moves.push(reflect_second);
    }
    moves
}

fn embed(model: &WaveModel, x: [f64; 2], t: f64) -> ConfigPoint {
    match model.dim() {
        1 => ConfigPoint::new([x[0]], [x[1]], t),
        _ => ConfigPoint::new([x[0], 0.0], [x[1], 0.0], t),
    }
}

/// Draw `n_samples` configurations at `t = 0` from `|Psi|^2`.
///
/// Only the x coordinates are sampled. The Gaussian slit density does not
/// depend on `y`, so sampled points carry `y1 = y2 = 0`.
pub fn sample_initial(model: &WaveModel, settings: &SamplerSettings) -> Result<InitialSamples> {
    settings.validate()?;
    if !model.is_normalizable() {
        return Err(Error::NotNormalizable(model.name()));
    }
    let chain = ChainSettings {
        burn_in: settings.burn_in,
        thinning: settings.thinning,
        proposal_scale: settings.proposal_scale.unwrap_or_else(|| model.width()),
    };
    let moves = symmetry_moves(model);
    let center = model.center_configuration(0.0);
    let start = [center.r1[0], center.r2[0]];
    let per_chain = settings.samples_per_chain;
    let n_chains = settings.n_samples.div_ceil(per_chain);
    let log_density = |x: &[f64; 2]| {
        let p = embed(model, *x, 0.0);
        model.scaled_amplitude(&p.r1, &p.r2, 0.0).log_density()
    };

    let chains: Vec<_> = (0..n_chains)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(i as u64);
            let n = per_chain.min(settings.n_samples - i * per_chain);
            run_chain(log_density, start, &moves, n, &chain, &mut rng)
        })
        .collect();

    let (accepted, proposed) = chains
        .iter()
        .fold((0u64, 0u64), |(a, p), c| (a + c.accepted, p + c.proposed));
    let acceptance_rate = accepted as f64 / proposed.max(1) as f64;
    if !(0.1..=0.6).contains(&acceptance_rate) {
        warn!("poor mixing: Metropolis acceptance rate {acceptance_rate:.3} outside [0.1, 0.6]");
    } else {
        info!("Metropolis acceptance rate {acceptance_rate:.3}");
    }
    let points = chains
        .into_iter()
        .flat_map(|c| c.samples)
        .map(|x| embed(model, x, 0.0))
        .collect();
    Ok(InitialSamples {
        points,
        acceptance_rate,
    })
}

/// Integrate every initial point over `time_grid`, in parallel, preserving order.
pub fn propagate(
    model: &WaveModel,
    initial: &[ConfigPoint],
    time_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Ensemble> {
    let trajectories = initial
        .par_iter()
        .map(|start| run_sampled(model, start, time_grid, settings))
        .collect::<Result<Vec<_>>>()?;
    let count = |s| trajectories.iter().filter(|t| t.status == s).count();
    let aborted_count = count(TrajectoryStatus::AbortedNearNode);
    let step_limit_count = count(TrajectoryStatus::StepLimitExceeded);
    if aborted_count + step_limit_count > 0 {
        warn!("{aborted_count} trajectories aborted near nodes, {step_limit_count} hit the step limit");
    }
    let t0 = initial.first().map(|p| p.t);
    let grid: Vec<f64> = t0
        .into_iter()
        .chain(time_grid.iter().copied().filter(|&t| t0.is_none_or(|t0| t > t0)))
        .collect();
    Ok(Ensemble {
        model: *model,
        trajectories,
        time_grid: grid,
        seed: None,
        aborted_count,
        step_limit_count,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlitClass {
    DifferentSlits,
    SameSlit,
    Other,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SlitPartition {
    pub different_slits: Vec<ConfigPoint>,
    pub same_slit: Vec<ConfigPoint>,
    pub other: Vec<ConfigPoint>,
}

/// Classify a configuration by the slit bands `a ± w sigma0` and `-a ± w sigma0`.
pub fn classify_slits(model: &WaveModel, p: &ConfigPoint, width_multiplier: f64) -> Result<SlitClass> {
    let Variant::GaussianSlit { sigma0, a, .. } = model.variant else {
        return Err(Error::UnsupportedModel {
            operation: "different_slit_filter",
            model: model.name(),
        });
    };
    let band = width_multiplier * sigma0;
    let at = |x: f64, center: f64| (x - center).abs() <= band;
    let (x1, x2) = (p.r1[0], p.r2[0]);
    Ok(if (at(x1, a) && at(x2, -a)) || (at(x1, -a) && at(x2, a)) {
        SlitClass::DifferentSlits
    } else if (at(x1, a) && at(x2, a)) || (at(x1, -a) && at(x2, -a)) {
        SlitClass::SameSlit
    } else {
        SlitClass::Other
    })
}

/// Split initial points into pairs leaving through different slits, the
/// same slit, or neither.
pub fn different_slit_filter(
    initial: &[ConfigPoint],
    model: &WaveModel,
    width_multiplier: f64,
) -> Result<SlitPartition> {
    let mut out = SlitPartition::default();
    for p in initial {
        match classify_slits(model, p, width_multiplier)? {
            SlitClass::DifferentSlits => out.different_slits.push(p.clone()),
            SlitClass::SameSlit => out.same_slit.push(p.clone()),
            SlitClass::Other => out.other.push(p.clone()),
        }
    }
    Ok(out)
}
