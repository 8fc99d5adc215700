//! Random-walk Metropolis chains with optional symmetry moves.

use rand::Rng;
use rand_distr::StandardNormal;

/// A density-preserving involution of the state, proposed in addition to
/// the random walk. Metropolis acceptance still applies, so a move that is
/// only approximately symmetric keeps the chain exact.
pub type Involution<const N: usize> = fn([f64; N]) -> [f64; N];

#[derive(Debug, Clone)]
pub struct ChainOutput<const N: usize> {
    pub samples: Vec<[f64; N]>,
    pub accepted: u64,
    pub proposed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct ChainSettings {
    pub burn_in: usize,
    pub thinning: usize,
    pub proposal_scale: f64,
}

/// Run one chain targeting `exp(log_density)` from `start`, returning
/// `n_samples` states taken every `thinning` sweeps after `burn_in` sweeps.
///
/// A sweep is one Gaussian random-walk proposal followed by each symmetry
/// move proposed with probability 1/2. Only the random-walk proposals count
/// towards the acceptance rate.
pub fn run_chain<const N: usize, R, F>(
    log_density: F,
    start: [f64; N],
    moves: &[Involution<N>],
    n_samples: usize,
    settings: &ChainSettings,
    rng: &mut R,
) -> ChainOutput<N>
where
    R: Rng + ?Sized,
    F: Fn(&[f64; N]) -> f64,
{
    let mut state = start;
    let mut log_p = log_density(&state);
    let mut out = ChainOutput {
        samples: Vec::with_capacity(n_samples),
        accepted: 0,
        proposed: 0,
    };
    let thinning = settings.thinning.max(1);
    let total = settings.burn_in + n_samples * thinning;
    for sweep in 0..total {
        let mut proposal = state;
        for x in proposal.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *x += settings.proposal_scale * z;
        }
        let log_q = log_density(&proposal);
        out.proposed += 1;
        if accept(log_q - log_p, rng) {
            state = proposal;
            log_p = log_q;
            out.accepted += 1;
        }
        for mv in moves {
            if rng.random_bool(0.5) {
                let proposal = mv(state);
                let log_q = log_density(&proposal);
                if accept(log_q - log_p, rng) {
                    state = proposal;
                    log_p = log_q;
                }
            }
        }
        if sweep >= settings.burn_in && (sweep - settings.burn_in + 1).is_multiple_of(thinning) {
            out.samples.push(state);
        }
    }
    out
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    if log_ratio.is_nan() {
        return false;
    }
    rng.random::<f64>().ln() < log_ratio
}
