//! Joint detection probabilities from quadrature and their Bohmian
//! counterparts estimated from ensembles.
//!
//! "One particle in `R1` and the other in `R2`" is the unordered event,
//! `P(R1×R2) + P(R2×R1) - P((R1∩R2)×(R1∩R2))`, for both estimators.

pub mod ks;
mod marginal;

pub use ks::{ks_critical_value, ks_distance};
pub use marginal::{Coordinate, MarginalCdf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{adaptive_2d, Adaptive2d};
use crate::wavefunction::WaveModel;
use crate::{dynamics, ensemble::Ensemble};
use marginal::{density_x, panel_width};

/// A possibly half-infinite interval; `None` means unbounded on that side.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
}

impl Interval {
    pub const FULL: Interval = Interval { lo: None, hi: None };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo: Some(lo),
            hi: Some(hi),
        }
    }

    pub fn above(lo: f64) -> Self {
        Self { lo: Some(lo), hi: None }
    }

    pub fn below(hi: f64) -> Self {
        Self { lo: None, hi: Some(hi) }
    }

    pub fn lower(&self) -> f64 {
        self.lo.unwrap_or(f64::NEG_INFINITY)
    }

    pub fn upper(&self) -> f64 {
        self.hi.unwrap_or(f64::INFINITY)
    }

    pub fn is_full(&self) -> bool {
        self.lo.is_none() && self.hi.is_none()
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lower() && v <= self.upper()
    }

    fn intersect(&self, other: &Interval) -> Interval {
        let lo = match (self.lo, other.lo) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Interval { lo, hi }
    }
}

/// A detector region for one particle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    #[serde(default)]
    pub x: Interval,
    #[serde(default)]
    pub y: Interval,
}

impl Region {
    pub const ALL: Region = Region {
        x: Interval::FULL,
        y: Interval::FULL,
    };

    pub fn x_above(x: f64) -> Self {
        Self {
            x: Interval::above(x),
            ..Self::ALL
        }
    }

    pub fn x_below(x: f64) -> Self {
        Self {
            x: Interval::below(x),
            ..Self::ALL
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        for (axis, iv) in [("x", &self.x), ("y", &self.y)] {
            for v in [iv.lo, iv.hi].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(invalid(&format!("{field}.{axis}"), "bounds must be finite or omitted"));
                }
            }
            if let (Some(lo), Some(hi)) = (iv.lo, iv.hi) {
                if lo >= hi {
                    return Err(invalid(&format!("{field}.{axis}"), format!("lo {lo} must be below hi {hi}")));
                }
            }
        }
        Ok(())
    }

    pub fn contains(&self, r: &[f64]) -> bool {
        self.x.contains(r[0]) && r.get(1).is_none_or(|&y| self.y.contains(y))
    }

    fn intersect(&self, other: &Region) -> Region {
        Region {
            x: self.x.intersect(&other.x),
            y: self.y.intersect(&other.y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectionReport {
    pub quantum_probability: f64,
    pub bohmian_fraction: f64,
    pub mc_standard_error: f64,
    pub n_effective: usize,
    /// Always true: both orderings of the pair are counted.
    pub symmetrized_over_exchange: bool,
}

impl DetectionReport {
    /// `|fraction - probability|` in units of the Monte Carlo standard error.
    pub fn deviation_in_standard_errors(&self) -> f64 {
        (self.bohmian_fraction - self.quantum_probability).abs() / self.mc_standard_error
    }
}

/// Normalized `P(x1 ∈ a, x2 ∈ b)` by tensor-product quadrature.
fn ordered_probability(model: &WaveModel, a: &Interval, b: &Interval, t: f64, norm2: f64) -> Result<f64> {
    let (s_lo, s_hi) = model.x_support(t).ok_or(Error::NotNormalizable(model.name()))?;
    let clip = |iv: &Interval| (iv.lower().max(s_lo), iv.upper().min(s_hi));
    let (x, y) = (clip(a), clip(b));
    if x.1 <= x.0 || y.1 <= y.0 {
        return Ok(0.0);
    }
    let span = (x.1 - x.0).max(y.1 - y.0);
    let settings = Adaptive2d {
        initial_panels: (span / (4.0 * panel_width(model, t)?)).ceil().max(2.0) as usize,
        ..Default::default()
    };
    let f = |x1: f64, x2: f64| density_x(model, x1, x2, t);
    Ok(norm2 * adaptive_2d(&settings, x, y, &f)?)
}

/// Quantum probability that one particle is found in `r1` and the other in `r2` at time `t`.
///
/// The density does not depend on `y`, so regions must leave `y` unbounded.
pub fn joint_probability(model: &WaveModel, r1: &Region, r2: &Region, t: f64) -> Result<f64> {
    r1.validate("region1")?;
    r2.validate("region2")?;
    if !model.is_normalizable() {
        return Err(Error::NotNormalizable(model.name()));
    }
    for (field, r) in [("region1.y", r1), ("region2.y", r2)] {
        if !r.y.is_full() {
            return Err(invalid(field, "the density is uniform in y; only x bounds can be used"));
        }
    }
    let norm2 = model.total_weight(t)?.recip();
    let overlap = r1.intersect(r2);
    let p12 = ordered_probability(model, &r1.x, &r2.x, t, norm2)?;
    let p21 = ordered_probability(model, &r2.x, &r1.x, t, norm2)?;
    let both = if overlap.x.lower() < overlap.x.upper() {
        ordered_probability(model, &overlap.x, &overlap.x, t, norm2)?
    } else {
        0.0
    };
    Ok((p12 + p21 - both).clamp(0.0, 1.0))
}

/// Fraction of completed pairs found in `(r1, r2)` at grid time `t`, next to
/// the quadrature value for the same event.
///
/// The standard error uses the Laplace-smoothed rate `(k+1)/(n+2)` so that a
/// zero count still carries a finite uncertainty of order `1/n`.
pub fn bohmian_detection(ensemble: &Ensemble, r1: &Region, r2: &Region, t: f64) -> Result<DetectionReport> {
    let positions = ensemble.positions_at(t)?;
    if positions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let n = positions.len();
    let hits = positions
        .iter()
        .filter(|p| (r1.contains(&p.r1) && r2.contains(&p.r2)) || (r2.contains(&p.r1) && r1.contains(&p.r2)))
        .count();
    let quantum_probability = joint_probability(&ensemble.model, r1, r2, t)?;
    let smoothed = (hits as f64 + 1.0) / (n as f64 + 2.0);
    Ok(DetectionReport {
        quantum_probability,
        bohmian_fraction: hits as f64 / n as f64,
        mc_standard_error: (smoothed * (1.0 - smoothed) / n as f64).sqrt(),
        n_effective: n,
        symmetrized_over_exchange: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
    /// Quantum probability of the bin divided by its width; `None` when no
    /// quadrature reference exists.
    pub quantum_density: Option<f64>,
}

fn histogram(values: &[f64], bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            low: lo + i as f64 * width,
            high: if i + 1 == bins { hi } else { lo + (i + 1) as f64 * width },
            count: 0,
            quantum_density: None,
        })
        .collect();
    for v in values {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        out[i].count += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrossingSummary {
    pub plane_x: f64,
    pub t: f64,
    pub n_pairs: usize,
    pub both_above: usize,
    pub both_below: usize,
    pub split: usize,
    /// Pair midpoints `(x1(0) + x2(0)) / 2`.
    pub midpoint_histogram: Vec<HistogramBin>,
    pub midpoint_min: f64,
    pub midpoint_max: f64,
    /// Worst centre-of-mass constraint residual over the pairs, for models that have one.
    pub max_constraint_residual: Option<f64>,
    /// Pairs with both particles within `1e-3` packet widths of `x = 0` at some grid time.
    pub simultaneous_plane_occupancy: usize,
}

impl CrossingSummary {
    pub fn same_side_fraction(&self) -> f64 {
        (self.both_above + self.both_below) as f64 / self.n_pairs as f64
    }
}

/// Where completed pairs sit relative to the plane `x = plane_x` at grid time `t`.
pub fn crossing_statistics(ensemble: &Ensemble, plane_x: f64, t: f64, bins: usize) -> Result<CrossingSummary> {
    let idx = ensemble.grid_index(t)?;
    let completed: Vec<_> = ensemble.completed().collect();
    if completed.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let (mut above, mut below, mut split) = (0, 0, 0);
    let mut midpoints = Vec::with_capacity(completed.len());
    let mut occupancy = 0;
    let tol = 1e-3 * ensemble.model.width();
    let mut residual: Option<f64> = None;
    for traj in &completed {
        let p = &traj.points[idx];
        match (p.r1[0] > plane_x, p.r2[0] > plane_x) {
            (true, true) => above += 1,
            (false, false) => below += 1,
            _ => split += 1,
        }
        midpoints.push(0.5 * (traj.first().r1[0] + traj.first().r2[0]));
        if traj.points.iter().any(|q| q.r1[0].abs() < tol && q.r2[0].abs() < tol) {
            occupancy += 1;
        }
        match dynamics::constraint_residual(&ensemble.model, traj) {
            Ok(r) => residual = Some(residual.map_or(r, |m| m.max(r))),
            Err(Error::UnsupportedModel { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(CrossingSummary {
        plane_x,
        t,
        n_pairs: completed.len(),
        both_above: above,
        both_below: below,
        split,
        midpoint_min: midpoints.iter().copied().fold(f64::INFINITY, f64::min),
        midpoint_max: midpoints.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        midpoint_histogram: histogram(&midpoints, bins),
        max_constraint_residual: residual,
        simultaneous_plane_occupancy: occupancy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalHistogram {
    pub coordinate: Coordinate,
    pub t: f64,
    pub n: usize,
    pub bins: Vec<HistogramBin>,
    pub ks_distance: f64,
    pub ks_critical_1pct: f64,
}

impl MarginalHistogram {
    pub fn passes_ks(&self) -> bool {
        self.ks_distance < self.ks_critical_1pct
    }
}

/// Histogram of one coordinate over the completed pairs at grid time `t`,
/// with the KS distance to the quadrature marginal.
pub fn marginal_histogram(ensemble: &Ensemble, coordinate: Coordinate, t: f64, bins: usize) -> Result<MarginalHistogram> {
    if !ensemble.model.is_normalizable() {
        return Err(Error::NotNormalizable(ensemble.model.name()));
    }
    let positions = ensemble.positions_at(t)?;
    if positions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut values: Vec<f64> = positions.iter().map(|p| coordinate.of(p.r1[0], p.r2[0])).collect();
    values.sort_by(f64::total_cmp);
    let cdf = MarginalCdf::new(&ensemble.model, coordinate, t)?;
    let mut bins = histogram(&values, bins);
    for b in bins.iter_mut() {
        b.quantum_density = Some((cdf.cdf(b.high) - cdf.cdf(b.low)) / (b.high - b.low));
    }
    Ok(MarginalHistogram {
        coordinate,
        t,
        n: values.len(),
        ks_distance: ks_distance(&values, |v| cdf.cdf(v)),
        ks_critical_1pct: ks_critical_value(values.len(), 0.01),
        bins,
    })
}
