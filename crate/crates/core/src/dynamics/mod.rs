//! Guidance velocities and trajectory integration.
//!
//! Each particle moves with `v_i = (hbar/m) Im(∇_i Psi / Psi)`. The field is
//! singular at nodes of `Psi`, so every evaluation is checked against a
//! density floor and reported as [`Error::NodeProximity`] when it falls below.

mod integrator;

pub use integrator::{
    integrate, integrate_sampled, IntegratorSettings, Trajectory, TrajectoryStatus,
};
pub(crate) use integrator::run_sampled;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavefunction::{
    Composition, ConfigPoint, ScaledAmplitude, Slit, Variant, WaveFunction, WaveModel, MAX_DIM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityPair {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

/// `(hbar/m) Im(grad/value)` for both particles, written into a flat
/// `[v1..., v2...]` buffer of length `2 * dim`.
pub(crate) fn guidance_into(amp: &ScaledAmplitude, hbar_over_m: f64, dim: usize, out: &mut [f64]) {
    let inv = amp.value.inv();
    for k in 0..dim {
        out[k] = hbar_over_m * (amp.grad1[k] * inv).im;
        out[dim + k] = hbar_over_m * (amp.grad2[k] * inv).im;
    }
}

fn check_dim(w: &impl WaveFunction, p: &ConfigPoint) -> Result<()> {
    let d = w.dim();
    for found in [p.r1.len(), p.r2.len()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    Ok(())
}

/// Amplitude at `p`, rejected when `|Psi|^2` is below `node_epsilon` times
/// the model's reference density at the same time.
fn checked_amplitude<W: WaveFunction>(w: &W, p: &ConfigPoint, node_epsilon: f64) -> Result<ScaledAmplitude> {
    check_dim(w, p)?;
    let amp = w.scaled_amplitude(&p.r1, &p.r2, p.t);
    let log_floor = node_epsilon.ln() + w.reference_log_density(p.t);
    let log_density = amp.log_density();
    if !(log_density >= log_floor) {
        return Err(Error::NodeProximity {
            density: log_density.exp(),
            threshold: log_floor.exp(),
        });
    }
    Ok(amp)
}

/// Guidance velocities for any wave function, with an explicit node floor.
pub fn velocity_with<W: WaveFunction>(w: &W, p: &ConfigPoint, node_epsilon: f64) -> Result<VelocityPair> {
    let amp = checked_amplitude(w, p, node_epsilon)?;
    let d = w.dim();
    let mut buf = [0.0; 2 * MAX_DIM];
    guidance_into(&amp, w.constants().hbar_over_m(), d, &mut buf);
    Ok(VelocityPair {
        v1: buf[..d].to_vec(),
        v2: buf[d..2 * d].to_vec(),
    })
}

/// Guidance velocities `(v1, v2)` at `p`.
pub fn velocity(model: &WaveModel, p: &ConfigPoint) -> Result<VelocityPair> {
    velocity_with(model, p, IntegratorSettings::default().node_epsilon)
}

/// Closed form of `v1x + v2x` for the Gaussian slit models.
///
/// For the product composition this is
///
/// ```text
/// (hbar/2m s0^2)^2 (x1+x2) t / (1 + tau^2)
///   + (hbar/m) Im{ [(a + hbar kx t/m)/(s0 s_t) + 2 i kx] [psiA(r1)psiA(r2) - psiB(r1)psiB(r2)] / Psi }
/// ```
///
/// with `tau = hbar t / 2 m s0^2`; for the symmetrized composition only the
/// first term survives.
pub fn velocity_sum_x(model: &WaveModel, p: &ConfigPoint) -> Result<f64> {
    velocity_sum_x_impl(model, p, 1.0)
}

/// Same as [`velocity_sum_x`] with the sign of the `2 i kx` term chosen by the
/// caller. Used to confirm that the consistency checks detect a wrong term.
#[doc(hidden)]
pub fn velocity_sum_x_with_kx_sign(model: &WaveModel, p: &ConfigPoint, kx_term_sign: f64) -> Result<f64> {
    velocity_sum_x_impl(model, p, kx_term_sign)
}

fn velocity_sum_x_impl(model: &WaveModel, p: &ConfigPoint, kx_term_sign: f64) -> Result<f64> {
    let Variant::GaussianSlit {
        sigma0,
        a,
        kx,
        composition,
        ..
    } = model.variant
    else {
        return Err(Error::UnsupportedModel {
            operation: "velocity_sum_x",
            model: model.name(),
        });
    };
    let amp = checked_amplitude(model, p, IntegratorSettings::default().node_epsilon)?;
    let hm = model.constants.hbar_over_m();
    let rate = hm / (2.0 * sigma0 * sigma0);
    let tau = rate * p.t;
    let first = rate * rate * (p.r1[0] + p.r2[0]) * p.t / (1.0 + tau * tau);
    if composition == Composition::Symmetrized {
        return Ok(first);
    }
    let sigma_t = model.sigma_t(p.t).unwrap();
    let (la1, _) = model.log_orbital(Slit::A, &p.r1, p.t);
    let (la2, _) = model.log_orbital(Slit::A, &p.r2, p.t);
    let (lb1, _) = model.log_orbital(Slit::B, &p.r1, p.t);
    let (lb2, _) = model.log_orbital(Slit::B, &p.r2, p.t);
    let antisym = (la1 + la2 - amp.log_scale).exp() - (lb1 + lb2 - amp.log_scale).exp();
    let coefficient = (a + hm * kx * p.t) / (sigma0 * sigma_t) + Complex64::new(0.0, kx_term_sign * 2.0 * kx);
    Ok(first + hm * (coefficient * antisym / amp.value).im)
}

/// `x1 + x2` predicted at time `t` for a pair whose sum was `sum0` at `t0`, for
/// the models with a centre-of-mass constraint: constant for the oscillator
/// pair, growing as `sqrt(1 + (hbar t / 2 m s0^2)^2)` for the symmetrized
/// Gaussian slit pair.
pub fn predicted_coordinate_sum(model: &WaveModel, sum0: f64, t0: f64, t: f64) -> Result<f64> {
    match model.variant {
        Variant::OscillatorPair { .. } => Ok(sum0),
        Variant::GaussianSlit {
            sigma0,
            composition: Composition::Symmetrized,
            ..
        } => {
            let rate = model.constants.hbar_over_m() / (2.0 * sigma0 * sigma0);
            let growth = |s: f64| (1.0 + (rate * s).powi(2)).sqrt();
            Ok(sum0 * growth(t) / growth(t0))
        }
        _ => Err(Error::UnsupportedModel {
            operation: "constraint_residual",
            model: model.name(),
        }),
    }
}

/// Largest deviation of `x1(t) + x2(t)` from its predicted value over the
/// trajectory's points, relative to `max(|predicted|, packet width)`.
pub fn constraint_residual(model: &WaveModel, traj: &Trajectory) -> Result<f64> {
    let Some(first) = traj.points.first() else {
        return Ok(0.0);
    };
    let sum0 = first.r1[0] + first.r2[0];
    let width = model.width();
    let mut worst = 0.0f64;
    for p in &traj.points {
        let predicted = predicted_coordinate_sum(model, sum0, first.t, p.t)?;
        let residual = (p.r1[0] + p.r2[0] - predicted).abs() / predicted.abs().max(width);
        worst = worst.max(residual);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::PhysicalConstants;

    #[test]
    fn plane_wave_velocity_is_pure_y() {
        let m = WaveModel::plane_wave(1.3, 0.7).unwrap();
        let v = velocity(&m, &ConfigPoint::new([0.3, 1.0], [-0.2, 4.0], 2.0)).unwrap();
        assert!(v.v1[0].abs() < 1e-15 && v.v2[0].abs() < 1e-15);
        assert!((v.v1[1] - 0.7).abs() < 1e-15 && (v.v2[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn plane_wave_node_is_rejected() {
        let m = WaveModel::plane_wave(1.0, 0.0).unwrap();
        let p = ConfigPoint::new([std::f64::consts::FRAC_PI_2, 0.0], [0.0, 0.0], 0.0);
        assert!(matches!(velocity(&m, &p), Err(Error::NodeProximity { .. })));
    }

    #[test]
    fn both_on_symmetry_plane_pins_x_velocity() {
        let models = [
            WaveModel::gaussian_slit(0.8, 2.0, 0.3, 0.5, Composition::Symmetrized).unwrap(),
            WaveModel::gaussian_slit(0.8, 2.0, 0.3, 0.5, Composition::Product).unwrap(),
            WaveModel::plane_wave(0.7, 0.2).unwrap(),
        ];
        for m in models {
            let v = velocity(&m, &ConfigPoint::new([0.0, 0.4], [0.0, -1.2], 1.3)).unwrap();
            assert!(v.v1[0].abs() < 1e-14 && v.v2[0].abs() < 1e-14, "{}: {v:?}", m.name());
        }
        let osc = WaveModel::oscillator(1.0, 1.0).unwrap();
        let v = velocity(&osc, &ConfigPoint::new([0.0], [0.0], 0.4)).unwrap();
        assert!(v.v1[0].abs() < 1e-14 && v.v2[0].abs() < 1e-14);
    }

    #[test]
    fn symmetrized_velocity_sum_vanishes_at_t0_and_zero_sum() {
        let m = WaveModel::gaussian_slit(1.0, 5.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
        assert_eq!(velocity_sum_x(&m, &ConfigPoint::new([4.0, 0.0], [-5.5, 0.0], 0.0)).unwrap(), 0.0);
        assert_eq!(velocity_sum_x(&m, &ConfigPoint::new([4.5, 0.0], [-4.5, 0.0], 3.0)).unwrap(), 0.0);
    }

    #[test]
    fn symmetrized_velocity_sum_matches_guidance() {
        let m = WaveModel::gaussian_slit(1.0, 5.0, 0.0, 0.2, Composition::Symmetrized).unwrap();
        let p = ConfigPoint::new([4.3, 0.1], [-5.2, 0.7], 2.5);
        let v = velocity(&m, &p).unwrap();
        let closed = velocity_sum_x(&m, &p).unwrap();
        assert!((v.v1[0] + v.v2[0] - closed).abs() < 1e-12);
    }

    #[test]
    fn product_velocity_sum_needs_kx_term() {
        let m = WaveModel::gaussian_slit(0.9, 1.5, 0.8, 0.1, Composition::Product).unwrap();
        let p = ConfigPoint::new([1.1, 0.0], [-0.3, 0.5], 0.7);
        let v = velocity(&m, &p).unwrap();
        let sum = v.v1[0] + v.v2[0];
        assert!((velocity_sum_x(&m, &p).unwrap() - sum).abs() < 1e-10 * sum.abs().max(1.0));
        let wrong = velocity_sum_x_with_kx_sign(&m, &p, -1.0).unwrap();
        assert!((wrong - sum).abs() > 1e-4);
    }

    #[test]
    fn velocity_sum_rejects_other_models() {
        let m = WaveModel::oscillator(1.0, 1.0).unwrap();
        assert!(matches!(
            velocity_sum_x(&m, &ConfigPoint::new([0.1], [0.2], 0.0)),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn eq20_prediction_doubles_at_tau_sqrt3() {
        let sigma0 = 0.5;
        let hbar = 2.0;
        let mass = 3.0;
        let m = WaveModel::gaussian_slit(sigma0, 5.0, 0.0, 0.0, Composition::Symmetrized)
            .unwrap()
            .with_constants(PhysicalConstants { hbar, mass })
            .unwrap();
        let t = 3f64.sqrt() * 2.0 * mass * sigma0 * sigma0 / hbar;
        let predicted = predicted_coordinate_sum(&m, sigma0, 0.0, t).unwrap();
        assert!((predicted - 2.0 * sigma0).abs() < 1e-14);
    }

    #[test]
    fn residual_of_mirror_start_measures_sum_directly() {
        let m = WaveModel::gaussian_slit(1.0, 5.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
        let traj = Trajectory {
            points: vec![
                ConfigPoint::new([5.0, 0.0], [-5.0, 0.0], 0.0),
                ConfigPoint::new([6.0, 0.0], [-6.0 + 1e-3, 0.0], 1.0),
            ],
            status: TrajectoryStatus::Completed,
            min_density_seen: 1.0,
            step_count: 1,
        };
        let r = constraint_residual(&m, &traj).unwrap();
        assert!((r - 1e-3).abs() < 1e-12);
    }

    #[test]
    fn residual_unsupported_for_plane_waves() {
        let m = WaveModel::plane_wave(1.0, 1.0).unwrap();
        let traj = Trajectory {
            points: vec![ConfigPoint::new([0.0, 0.0], [1.0, 0.0], 0.0)],
            status: TrajectoryStatus::Completed,
            min_density_seen: 1.0,
            step_count: 0,
        };
        assert!(matches!(constraint_residual(&m, &traj), Err(Error::UnsupportedModel { .. })));
    }
}
