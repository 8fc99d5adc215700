//! Embedded Dormand–Prince 5(4) integration of the guidance equations.

use serde::{Deserialize, Serialize};

use super::guidance_into;
use crate::error::{invalid, Error, Result};
use crate::wavefunction::{ConfigPoint, WaveFunction, MAX_DIM};

const N_MAX: usize = 2 * MAX_DIM;

/// Consecutive node-induced step halvings tolerated before a trajectory is abandoned.
const MAX_NODE_REJECTIONS: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// A step is refused when `|Psi|^2` drops below this fraction of the
    /// largest density met so far along the trajectory.
    pub node_epsilon: f64,
    pub max_steps: u64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            node_epsilon: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("integrator.rel_tol", self.rel_tol),
            ("integrator.abs_tol", self.abs_tol),
            ("integrator.node_epsilon", self.node_epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        if self.max_steps == 0 {
            return Err(invalid("integrator.max_steps", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryStatus {
    Completed,
    AbortedNearNode,
    StepLimitExceeded,
}

impl TrajectoryStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TrajectoryStatus::Completed => "completed",
            TrajectoryStatus::AbortedNearNode => "aborted_near_node",
            TrajectoryStatus::StepLimitExceeded => "step_limit_exceeded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub points: Vec<ConfigPoint>,
    pub status: TrajectoryStatus,
    /// Smallest `|Psi|^2` met at an accepted step, relative to the largest.
    pub min_density_seen: f64,
    /// Accepted steps.
    pub step_count: u64,
}

impl Trajectory {
    pub fn is_completed(&self) -> bool {
        self.status == TrajectoryStatus::Completed
    }

    pub fn first(&self) -> &ConfigPoint {
        &self.points[0]
    }

    pub fn last(&self) -> &ConfigPoint {
        self.points.last().unwrap()
    }
}

/// Integrate from `start` to `t_end`, recording every accepted step.
pub fn integrate<W: WaveFunction>(
    w: &W,
    start: &ConfigPoint,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    finish(run(w, start, &[t_end], true, settings)?, settings)
}

/// Integrate from `start`, reporting positions at `sample_times` through the
/// fourth-order continuous extension of the accepted steps. The start point
/// is always the first point of the trajectory.
pub fn integrate_sampled<W: WaveFunction>(
    w: &W,
    start: &ConfigPoint,
    sample_times: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    finish(run(w, start, sample_times, false, settings)?, settings)
}

fn finish(traj: Trajectory, settings: &IntegratorSettings) -> Result<Trajectory> {
    if traj.status == TrajectoryStatus::StepLimitExceeded {
        Err(Error::MaxStepsExceeded(settings.max_steps))
    } else {
        Ok(traj)
    }
}

/// Same as [`integrate_sampled`] but step-limit failures are kept as a status.
pub(crate) fn run_sampled<W: WaveFunction>(
    w: &W,
    start: &ConfigPoint,
    sample_times: &[f64],
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    run(w, start, sample_times, false, settings)
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Step-size controller (PI, Hairer–Wanner constants).
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO: f64 = 0.2 - BETA * 0.75;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

type State = [f64; N_MAX];

struct Field<'a, W> {
    w: &'a W,
    dim: usize,
    hbar_over_m: f64,
}

impl<W: WaveFunction> Field<'_, W> {
    fn n(&self) -> usize {
        2 * self.dim
    }

    /// Velocity at `(t, y)` and `ln |Psi|^2` there.
    fn eval(&self, t: f64, y: &State, out: &mut State) -> f64 {
        let d = self.dim;
        let amp = self.w.scaled_amplitude(&y[..d], &y[d..2 * d], t);
        guidance_into(&amp, self.hbar_over_m, d, out);
        amp.log_density()
    }

    fn point(&self, t: f64, y: &State) -> ConfigPoint {
        let d = self.dim;
        ConfigPoint::new(&y[..d], &y[d..2 * d], t)
    }
}

fn axpy(n: usize, y: &State, terms: &[(f64, &State)]) -> State {
    let mut out = [0.0; N_MAX];
    for i in 0..n {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + acc;
    }
    out
}

fn rms_norm(n: usize, v: &State, scale: &State) -> f64 {
    let s: f64 = (0..n).map(|i| (v[i] / scale[i]).powi(2)).sum();
    (s / n as f64).sqrt()
}

// Continuous extension coefficients (Hairer, Nørsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Fourth-order dense output inside an accepted step of length `h` from `y0`
/// to `y1`, at fraction `theta` of the step.
struct DenseStep {
    y0: State,
    diff: State,
    bspl: State,
    r4: State,
    r5: State,
}

impl DenseStep {
    fn new(n: usize, h: f64, y0: &State, y1: &State, k: [&State; 7]) -> Self {
        let [k1, _, k3, k4, k5, k6, k7] = k;
        let mut d = DenseStep {
            y0: *y0,
            diff: [0.0; N_MAX],
            bspl: [0.0; N_MAX],
            r4: [0.0; N_MAX],
            r5: [0.0; N_MAX],
        };
        for i in 0..n {
            d.diff[i] = y1[i] - y0[i];
            d.bspl[i] = h * k1[i] - d.diff[i];
            d.r4[i] = d.diff[i] - h * k7[i] - d.bspl[i];
            d.r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        d
    }

    fn at(&self, n: usize, theta: f64) -> State {
        let t1 = 1.0 - theta;
        let mut out = [0.0; N_MAX];
        for (i, o) in out.iter_mut().enumerate().take(n) {
            *o = self.y0[i] + theta * (self.diff[i] + t1 * (self.bspl[i] + theta * (self.r4[i] + t1 * self.r5[i])));
        }
        out
    }
}

fn validate_times(start: &ConfigPoint, times: &[f64]) -> Result<()> {
    let mut prev = start.t;
    for (i, &t) in times.iter().enumerate() {
        if !t.is_finite() || t < prev || (i > 0 && t == prev) {
            return Err(invalid(
                "time_grid",
                format!("sample times must be finite, increasing and not before t_start={}", start.t),
            ));
        }
        prev = t;
    }
    Ok(())
}

fn run<W: WaveFunction>(
    w: &W,
    start: &ConfigPoint,
    sample_times: &[f64],
    record_steps: bool,
    settings: &IntegratorSettings,
) -> Result<Trajectory> {
    settings.validate()?;
    validate_times(start, sample_times)?;
    let dim = w.dim();
    for found in [start.r1.len(), start.r2.len()] {
        if found != dim {
            return Err(Error::DimensionMismatch { expected: dim, found });
        }
    }
    let field = Field {
        w,
        dim,
        hbar_over_m: w.constants().hbar_over_m(),
    };
    let n = field.n();
    let t0 = start.t;
    let t_end = sample_times.last().copied().unwrap_or(t0);
    // Sample times equal to the start time are represented by the start point.
    let mut samples = sample_times.iter().copied().skip_while(|&s| s <= t0).peekable();

    let mut y: State = [0.0; N_MAX];
    y[..dim].copy_from_slice(&start.r1);
    y[dim..n].copy_from_slice(&start.r2);
    let mut f: State = [0.0; N_MAX];
    let log_start = field.eval(t0, &y, &mut f);

    let mut traj = Trajectory {
        points: vec![start.clone()],
        status: TrajectoryStatus::Completed,
        min_density_seen: 1.0,
        step_count: 0,
    };
    let log_eps = settings.node_epsilon.ln();
    let reference = w.reference_log_density(t0);
    let finite_field = f[..n].iter().all(|v| v.is_finite());
    if !(log_start >= log_eps + reference) || !finite_field {
        traj.status = TrajectoryStatus::AbortedNearNode;
        traj.min_density_seen = 0.0;
        return Ok(traj);
    }
    if t_end <= t0 {
        return Ok(traj);
    }
    let mut log_max = log_start;
    let mut log_min = log_start;

    let (rtol, atol) = (settings.rel_tol, settings.abs_tol);
    let scale_of = |a: &State, b: &State| {
        let mut s = [1.0; N_MAX];
        for i in 0..n {
            s[i] = atol + rtol * a[i].abs().max(b[i].abs());
        }
        s
    };

    let mut h = initial_step(&field, t0, &y, &f, t_end - t0, &scale_of(&y, &y));
    let mut t = t0;
    let mut attempts: u64 = 0;
    let mut node_rejections = 0u32;
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;

    while t < t_end {
        if attempts >= settings.max_steps {
            traj.status = TrajectoryStatus::StepLimitExceeded;
            break;
        }
        attempts += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            traj.status = TrajectoryStatus::AbortedNearNode;
            break;
        }

        let floor = log_eps + log_max;
        let mut k2 = [0.0; N_MAX];
        let mut k3 = [0.0; N_MAX];
        let mut k4 = [0.0; N_MAX];
        let mut k5 = [0.0; N_MAX];
        let mut k6 = [0.0; N_MAX];
        let mut k7 = [0.0; N_MAX];
        let mut ok = true;
        let mut stage = |tt: f64, yy: &State, k: &mut State| {
            if ok {
                let ld = field.eval(tt, yy, k);
                ok = ld >= floor && k[..n].iter().all(|v| v.is_finite());
            }
        };
        stage(t + C2 * h, &axpy(n, &y, &[(h * A21, &f)]), &mut k2);
        stage(t + C3 * h, &axpy(n, &y, &[(h * A31, &f), (h * A32, &k2)]), &mut k3);
        stage(
            t + C4 * h,
            &axpy(n, &y, &[(h * A41, &f), (h * A42, &k2), (h * A43, &k3)]),
            &mut k4,
        );
        stage(
            t + C5 * h,
            &axpy(n, &y, &[(h * A51, &f), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]),
            &mut k5,
        );
        let t_new = if last { t_end } else { t + h };
        stage(
            t_new,
            &axpy(
                n,
                &y,
                &[(h * A61, &f), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
            ),
            &mut k6,
        );
        let y_new = axpy(
            n,
            &y,
            &[(h * A71, &f), (h * A73, &k3), (h * A74, &k4), (h * A75, &k5), (h * A76, &k6)],
        );
        let mut log_new = f64::NAN;
        if ok {
            log_new = field.eval(t_new, &y_new, &mut k7);
            ok = log_new >= floor && k7[..n].iter().all(|v| v.is_finite());
        }
        if !ok {
            node_rejections += 1;
            if node_rejections >= MAX_NODE_REJECTIONS {
                traj.status = TrajectoryStatus::AbortedNearNode;
                break;
            }
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        node_rejections = 0;

        let err_vec = axpy(
            n,
            &[0.0; N_MAX],
            &[(h * E1, &f), (h * E3, &k3), (h * E4, &k4), (h * E5, &k5), (h * E6, &k6), (h * E7, &k7)],
        );
        let err = rms_norm(n, &err_vec, &scale_of(&y, &y_new));
        let fac11 = err.powf(EXPO);

        if err <= 1.0 {
            if record_steps {
                traj.points.push(field.point(t_new, &y_new));
            } else {
                let mut dense = None;
                while let Some(&ts) = samples.peek() {
                    if ts > t_new {
                        break;
                    }
                    let p = if ts == t_new {
                        y_new
                    } else {
                        dense
                            .get_or_insert_with(|| DenseStep::new(n, h, &y, &y_new, [&f, &k2, &k3, &k4, &k5, &k6, &k7]))
                            .at(n, (ts - t) / h)
                    };
                    traj.points.push(field.point(ts, &p));
                    samples.next();
                }
            }
            traj.step_count += 1;
            log_max = log_max.max(log_new);
            log_min = log_min.min(log_new);

            let mut fac = fac11 / fac_old.powf(BETA);
            fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            let mut h_new = h / fac;
            if last_rejected {
                h_new = h_new.min(h);
            }
            fac_old = err.max(1e-4);
            last_rejected = false;
            t = t_new;
            y = y_new;
            f = k7;
            h = h_new;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
    traj.min_density_seen = (log_min - log_max).exp();
    Ok(traj)
}

fn initial_step<W: WaveFunction>(
    field: &Field<'_, W>,
    t0: f64,
    y0: &State,
    f0: &State,
    span: f64,
    scale: &State,
) -> f64 {
    let n = field.n();
    let d0 = rms_norm(n, y0, scale);
    let d1 = rms_norm(n, f0, scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1 = axpy(n, y0, &[(h0, f0)]);
    let mut f1 = [0.0; N_MAX];
    field.eval(t0 + h0, &y1, &mut f1);
    let diff = axpy(n, &f1, &[(-1.0, f0)]);
    let d2 = rms_norm(n, &diff, scale) / h0;
    if !d2.is_finite() {
        return h0;
    }
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::constraint_residual;
    use crate::wavefunction::{Composition, WaveModel};

    #[test]
    fn plane_wave_moves_only_in_y() {
        let m = WaveModel::plane_wave(1.1, 0.6).unwrap();
        let start = ConfigPoint::new([0.2, 0.0], [-0.4, 1.0], 0.0);
        let traj = integrate(&m, &start, 10.0, &IntegratorSettings::default()).unwrap();
        assert!(traj.is_completed());
        let end = traj.last();
        assert_eq!(end.t, 10.0);
        assert!((end.r1[0] - 0.2).abs() < 1e-12);
        assert!((end.r2[0] + 0.4).abs() < 1e-12);
        assert!((end.r1[1] - 6.0).abs() < 1e-9);
        assert!((end.r2[1] - 7.0).abs() < 1e-9);
    }

    #[test]
    fn sampled_trajectory_hits_requested_times() {
        let m = WaveModel::gaussian_slit(1.0, 4.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
        let start = ConfigPoint::new([4.2, 0.0], [-3.5, 0.0], 0.0);
        let times: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let traj = integrate_sampled(&m, &start, &times, &IntegratorSettings::default()).unwrap();
        let got: Vec<f64> = traj.points.iter().map(|p| p.t).collect();
        assert_eq!(got, times);
        assert!(constraint_residual(&m, &traj).unwrap() < 1e-6);
    }

    #[test]
    fn start_on_node_is_aborted() {
        let m = WaveModel::plane_wave(1.0, 0.0).unwrap();
        let start = ConfigPoint::new([std::f64::consts::FRAC_PI_2, 0.0], [0.0, 0.0], 0.0);
        let traj = integrate(&m, &start, 1.0, &IntegratorSettings::default()).unwrap();
        assert_eq!(traj.status, TrajectoryStatus::AbortedNearNode);
        assert_eq!(traj.points.len(), 1);
    }

    #[test]
    fn step_limit_is_an_error() {
        let m = WaveModel::gaussian_slit(1.0, 4.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
        let start = ConfigPoint::new([4.2, 0.0], [-3.5, 0.0], 0.0);
        let settings = IntegratorSettings {
            max_steps: 3,
            ..Default::default()
        };
        assert_eq!(
            integrate(&m, &start, 50.0, &settings).unwrap_err(),
            Error::MaxStepsExceeded(3)
        );
    }

    #[test]
    fn rejects_unordered_times() {
        let m = WaveModel::oscillator(1.0, 1.0).unwrap();
        let start = ConfigPoint::new([0.9], [-1.0], 0.0);
        assert!(integrate_sampled(&m, &start, &[1.0, 0.5], &IntegratorSettings::default()).is_err());
        assert!(integrate_sampled(&m, &start, &[-1.0], &IntegratorSettings::default()).is_err());
    }

    #[test]
    fn tightening_tolerance_converges() {
        let m = WaveModel::gaussian_slit(1.0, 3.0, 0.4, 0.2, Composition::Product).unwrap();
        let start = ConfigPoint::new([2.6, 0.0], [-0.5, 0.3], 0.0);
        let loose = IntegratorSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            ..Default::default()
        };
        let tight = IntegratorSettings {
            rel_tol: 0.5e-8,
            abs_tol: 0.5e-10,
            ..Default::default()
        };
        let a = integrate(&m, &start, 4.0, &loose).unwrap();
        let b = integrate(&m, &start, 4.0, &tight).unwrap();
        let (pa, pb) = (a.last(), b.last());
        for (u, v) in pa.r1.iter().chain(&pa.r2).zip(pb.r1.iter().chain(&pb.r2)) {
            assert!((u - v).abs() < 10.0 * (loose.rel_tol * u.abs() + loose.abs_tol));
        }
    }
}
