//! One-dimensional marginals of the normalized `|Psi(x1, x2; t)|^2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::wavefunction::{WaveFunction, WaveModel};

const ORDER: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coordinate {
    X1,
    X2,
    /// `x1 + x2`
    SumX,
}

impl Coordinate {
    pub const ALL: [Coordinate; 3] = [Coordinate::X1, Coordinate::X2, Coordinate::SumX];

    pub fn name(&self) -> &'static str {
        match self {
            Coordinate::X1 => "x1",
            Coordinate::X2 => "x2",
            Coordinate::SumX => "x1_plus_x2",
        }
    }

    pub fn of(&self, x1: f64, x2: f64) -> f64 {
        match self {
            Coordinate::X1 => x1,
            Coordinate::X2 => x2,
            Coordinate::SumX => x1 + x2,
        }
    }
}

/// `|Psi|^2` at `(x1, x2)` with `y1 = y2 = 0`, unnormalized.
pub(crate) fn density_x(model: &WaveModel, x1: f64, x2: f64, t: f64) -> f64 {
    let amp = if model.dim() == 1 {
        model.scaled_amplitude(&[x1], &[x2], t)
    } else {
        model.scaled_amplitude(&[x1, 0.0], &[x2, 0.0], t)
    };
    amp.log_density().exp()
}

/// Largest panel width that resolves both the packet envelope and the
/// interference fringes between the two slit packets at time `t`.
pub(crate) fn panel_width(model: &WaveModel, t: f64) -> Result<f64> {
    let exponent = model
        .x_exponent_a(t)
        .ok_or(Error::NotNormalizable(model.name()))?;
    let (_, w) = model.packet_center_and_width(t);
    let fringe_rate = 2.0 * exponent.lin.im.abs();
    let fringe = if fringe_rate > 0.0 {
        2.0 * std::f64::consts::PI / fringe_rate
    } else {
        f64::INFINITY
    };
    Ok((0.25 * w).min(0.5 * fringe))
}

/// Tabulated marginal density and CDF along one coordinate.
///
/// The range is cut into panels; on each the exact marginal (an inner
/// Gauss–Legendre integral over the other coordinate) is sampled at the
/// Gauss nodes. Inside a panel the density is the Lagrange interpolant
/// through those nodes.
#[derive(Debug, Clone)]
pub struct MarginalCdf {
    lo: f64,
    h: f64,
    nodes: Vec<f64>,
    bary: Vec<f64>,
    values: Vec<[f64; ORDER]>,
    cumulative: Vec<f64>,
    rule: GaussLegendre,
}

impl MarginalCdf {
    pub fn new(model: &WaveModel, coordinate: Coordinate, t: f64) -> Result<Self> {
        let norm2 = model.total_weight(t)?.recip();
        let (s_lo, s_hi) = model.x_support(t).ok_or(Error::NotNormalizable(model.name()))?;
        let h_max = panel_width(model, t)?;
        let (lo, hi) = match coordinate {
            Coordinate::SumX => (2.0 * s_lo, 2.0 * s_hi),
            _ => (s_lo, s_hi),
        };
        let panels = ((hi - lo) / h_max).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        let rule = GaussLegendre::new(ORDER);
        let unit: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();
        let nodes: Vec<f64> = unit.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = unit.iter().map(|p| p.1).collect();
        let bary = barycentric_weights(&nodes);

        let inner = |v: f64| -> f64 {
            let (a, b) = match coordinate {
                Coordinate::SumX => (s_lo.max(v - s_hi), s_hi.min(v - s_lo)),
                _ => (s_lo, s_hi),
            };
            if b <= a {
                return 0.0;
            }
            let n_inner = ((b - a) / h_max).ceil().max(1.0) as usize;
            let f = |u: f64| match coordinate {
                Coordinate::X1 => density_x(model, v, u, t),
                Coordinate::X2 => density_x(model, u, v, t),
                Coordinate::SumX => density_x(model, u, v - u, t),
            };
            norm2 * rule.composite(a, b, n_inner, f)
        };

        let values: Vec<[f64; ORDER]> = (0..panels)
            .into_par_iter()
            .map(|i| {
                let base = lo + i as f64 * h;
                let mut out = [0.0; ORDER];
                for (o, x) in out.iter_mut().zip(&nodes) {
                    *o = inner(base + x * h);
                }
                out
            })
            .collect();
        let mut cumulative = Vec::with_capacity(panels + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for vals in &values {
            acc += h * vals.iter().zip(&weights).map(|(v, w)| v * w).sum::<f64>();
            cumulative.push(acc);
        }
        Ok(Self {
            lo,
            h,
            nodes,
            bary,
            values,
            cumulative,
            rule,
        })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.lo + self.h * self.values.len() as f64)
    }

    /// Total probability captured by the table (1 up to quadrature error).
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn locate(&self, v: f64) -> Option<(usize, f64)> {
        let s = (v - self.lo) / self.h;
        if !(s >= 0.0) || s >= self.values.len() as f64 {
            return None;
        }
        let i = s.floor() as usize;
        Some((i, s - i as f64))
    }

    fn interpolate(&self, panel: usize, u: f64) -> f64 {
        let vals = &self.values[panel];
        let mut num = 0.0;
        let mut den = 0.0;
        for ((x, w), f) in self.nodes.iter().zip(&self.bary).zip(vals) {
            let d = u - x;
            if d == 0.0 {
                return *f;
            }
            let c = w / d;
            num += c * f;
            den += c;
        }
        num / den
    }

    /// Marginal probability density at `v`.
    pub fn density(&self, v: f64) -> f64 {
        match self.locate(v) {
            Some((i, u)) => self.interpolate(i, u).max(0.0),
            None => 0.0,
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        if v <= self.lo {
            return 0.0;
        }
        match self.locate(v) {
            None => self.total(),
            Some((i, u)) => {
                let partial: f64 = self
                    .rule
                    .mapped(0.0, u)
                    .map(|(x, w)| w * self.interpolate(i, x))
                    .sum();
                self.cumulative[i] + self.h * partial
            }
        }
    }
}

fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    nodes
        .iter()
        .enumerate()
        .map(|(j, xj)| {
            let prod: f64 = nodes
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, xk)| xj - xk)
                .product();
            1.0 / prod
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::Composition;

    #[test]
    fn tables_integrate_to_one() {
        let models = [
            WaveModel::gaussian_slit(1.0, 10.0, 0.0, 0.0, Composition::Symmetrized).unwrap(),
            WaveModel::gaussian_slit(0.8, 2.0, 0.5, 0.0, Composition::Product).unwrap(),
            WaveModel::oscillator(1.0, 7.0).unwrap(),
        ];
        for m in models {
            for t in [0.0, 1.7] {
                for c in Coordinate::ALL {
                    let cdf = MarginalCdf::new(&m, c, t).unwrap();
                    assert!((cdf.total() - 1.0).abs() < 1e-10, "{} {c:?} t={t}: {}", m.name(), cdf.total());
                }
            }
        }
    }

    #[test]
    fn well_separated_marginal_is_half_normal_mixture() {
        // At t = 0 with a >> sigma0 the x1 marginal is an equal mixture of
        // N(a, sigma0^2) and N(-a, sigma0^2).
        let (sigma0, a) = (1.0, 10.0);
        let m = WaveModel::gaussian_slit(sigma0, a, 0.0, 0.0, Composition::Symmetrized).unwrap();
        let cdf = MarginalCdf::new(&m, Coordinate::X1, 0.0).unwrap();
        let phi = |z: f64| 0.5 * erfc(-z / 2f64.sqrt());
        for v in [-11.3, -10.0, -8.7, 0.0, 9.1, 10.4, 12.0] {
            let expected = 0.5 * phi((v - a) / sigma0) + 0.5 * phi((v + a) / sigma0);
            assert!((cdf.cdf(v) - expected).abs() < 1e-9, "v={v}: {} vs {expected}", cdf.cdf(v));
        }
    }

    /// Power series for erf below 3, continued fraction above.
    fn erfc(x: f64) -> f64 {
        if x < 0.0 {
            return 2.0 - erfc(-x);
        }
        if x < 3.0 {
            // series for erf
            let mut sum = x;
            let mut term = x;
            let x2 = x * x;
            for n in 1..200 {
                term *= -x2 / n as f64;
                let add = term / (2 * n + 1) as f64;
                sum += add;
                if add.abs() < 1e-17 {
                    break;
                }
            }
            1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
        } else {
            // continued fraction
            let mut f = 0.0;
            for k in (1..80).rev() {
                f = (k as f64 / 2.0) / (x + f);
            }
            (-x * x).exp() / std::f64::consts::PI.sqrt() / (x + f)
        }
    }
}
