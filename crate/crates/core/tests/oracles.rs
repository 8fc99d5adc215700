//! Library results against oracles written directly from the closed forms,
//! with plain complex arithmetic and no log scaling.

use bohm2p_core::dynamics::{velocity, velocity_sum_x};
use bohm2p_core::wavefunction::{
    evaluate, gradient, normalization_constant, Composition, ConfigPoint, Slit, WaveModel,
};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const I: C = C::new(0.0, 1.0);

fn slit_orbital(sigma0: f64, a: f64, kx: f64, ky: f64, x: f64, y: f64, t: f64) -> C {
    let st = C::new(sigma0, t / (2.0 * sigma0));
    let u = x - a - kx * t;
    (2.0 * PI * st * st).powf(-0.25)
        * (-(u * u) / (4.0 * sigma0 * st) + I * (kx * (x - a - kx * t / 2.0) + ky * y - ky * ky * t / 2.0)).exp()
}

/// `d/dx` of [`slit_orbital`].
fn slit_orbital_dx(sigma0: f64, a: f64, kx: f64, ky: f64, x: f64, y: f64, t: f64) -> C {
    let st = C::new(sigma0, t / (2.0 * sigma0));
    let u = x - a - kx * t;
    slit_orbital(sigma0, a, kx, ky, x, y, t) * (-u / (2.0 * sigma0 * st) + I * kx)
}

fn oscillator_orbital(omega: f64, a: f64, x: f64, t: f64) -> C {
    let (s, c) = (omega * t).sin_cos();
    (omega / PI).powf(0.25)
        * (-(omega / 2.0) * (x - a * c).powi(2)
            - I / 2.0 * (omega * t + omega / 2.0 * (4.0 * x * a * s - a * a * (2.0 * omega * t).sin())))
        .exp()
}

struct Slits {
    sigma0: f64,
    a: f64,
    kx: f64,
    ky: f64,
}

impl Slits {
    fn psi(&self, r: [f64; 2], t: f64) -> (C, C) {
        let f = |x| slit_orbital(self.sigma0, self.a, self.kx, self.ky, x, r[1], t);
        (f(r[0]), f(-r[0]))
    }

    fn total(&self, comp: Composition, r1: [f64; 2], r2: [f64; 2], t: f64) -> C {
        let (a1, b1) = self.psi(r1, t);
        let (a2, b2) = self.psi(r2, t);
        match comp {
            Composition::Symmetrized => a1 * b2 + a2 * b1,
            Composition::Product => (a1 + b1) * (a2 + b2),
        }
    }

    fn model(&self, comp: Composition) -> WaveModel {
        WaveModel::gaussian_slit(self.sigma0, self.a, self.kx, self.ky, comp).unwrap()
    }
}

fn close(a: C, b: C, tol: f64) -> bool {
    (a - b).norm() <= tol * b.norm().max(1e-300)
}

#[test]
fn gaussian_slit_matches_closed_form() {
    let s = Slits {
        sigma0: 0.8,
        a: 2.5,
        kx: 0.6,
        ky: -1.1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for comp in [Composition::Symmetrized, Composition::Product] {
        let m = s.model(comp);
        for _ in 0..300 {
            let r1 = [rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0)];
            let r2 = [rng.random_range(-5.0..5.0), rng.random_range(-3.0..3.0)];
            let t = rng.random_range(0.0..4.0);
            let got = evaluate(&m, &ConfigPoint::new(r1, r2, t)).unwrap();
            let want = s.total(comp, r1, r2, t);
            assert!(close(got, want, 1e-12), "{comp:?} {r1:?} {r2:?} {t}: {got} vs {want}");
        }
    }
}

#[test]
fn single_slit_factor_peak_value() {
    let m = WaveModel::gaussian_slit(0.5, 3.0, 0.0, 0.0, Composition::Product).unwrap();
    let v = m.orbital(Slit::A, &[3.0, 0.0], 0.0);
    assert!((v - C::from((2.0 * PI * 0.25f64).powf(-0.25))).norm() < 1e-15);
}

#[test]
fn oscillator_matches_closed_form() {
    let (omega, a) = (1.7, 2.0);
    let m = WaveModel::oscillator(omega, a).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..300 {
        let (x1, x2) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let t = rng.random_range(0.0..6.0);
        let f = |x| oscillator_orbital(omega, a, x, t);
        let want = f(x1) * f(-x2) + f(x2) * f(-x1);
        let got = evaluate(&m, &ConfigPoint::new([x1], [x2], t)).unwrap();
        assert!(close(got, want, 1e-12), "{x1} {x2} {t}");
    }
}

#[test]
fn oscillator_packet_centre_follows_cosine() {
    let (omega, a) = (1.0, 3.0);
    let m = WaveModel::oscillator(omega, a).unwrap();
    for t in [0.0, 0.4, 1.3, 2.9] {
        let (mut w, mut mean) = (0.0, 0.0);
        let h = 1e-3;
        for i in -12_000..=12_000 {
            let x = i as f64 * h;
            let d = m.orbital(Slit::A, &[x], t).norm_sqr();
            w += d;
            mean += x * d;
        }
        let centre = mean / w;
        assert!((centre - a * (omega * t).cos()).abs() < 1e-10, "t={t}: {centre}");
        assert!((w * h - 1.0).abs() < 1e-10);
    }
}

#[test]
fn plane_wave_matches_cosine_form() {
    let (kx, ky) = (0.9, 1.4);
    let m = WaveModel::plane_wave(kx, ky).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let r1 = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let r2 = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let t = rng.random_range(0.0..3.0);
        let want = 2.0 * (kx * (r1[0] - r2[0])).cos() * (I * (ky * (r1[1] + r2[1]) - (kx * kx + ky * ky) * t)).exp();
        let got = evaluate(&m, &ConfigPoint::new(r1, r2, t)).unwrap();
        assert!((got - want).norm() < 1e-13, "{got} vs {want}");
    }
}

#[test]
fn plane_wave_gradient_in_y() {
    let m = WaveModel::plane_wave(0.4, 1.9).unwrap();
    let p = ConfigPoint::new([0.3, -1.0], [1.2, 2.0], 0.8);
    let psi = evaluate(&m, &p).unwrap();
    let (g1, g2) = gradient(&m, &p).unwrap();
    assert!((g1[1] - I * 1.9 * psi).norm() < 1e-14);
    assert!((g2[1] - I * 1.9 * psi).norm() < 1e-14);
}

/// Central-difference velocities of the closed form, step `1e-5 max(1, |x|)`.
fn fd_velocity(f: &dyn Fn(&[f64], &[f64]) -> C, r1: &[f64], r2: &[f64]) -> Vec<f64> {
    let psi = f(r1, r2);
    let mut out = Vec::new();
    for particle in 0..2 {
        for k in 0..r1.len() {
            let base = if particle == 0 { r1[k] } else { r2[k] };
            let h = 1e-5 * base.abs().max(1.0);
            let at = |d: f64| {
                let (mut a, mut b) = (r1.to_vec(), r2.to_vec());
                if particle == 0 {
                    a[k] += d
                } else {
                    b[k] += d
                }
                f(&a, &b)
            };
            out.push(((at(h) - at(-h)) / (2.0 * h) / psi).im);
        }
    }
    out
}

fn max_velocity_error(
    m: &WaveModel,
    f: &dyn Fn(&[f64], &[f64]) -> C,
    sample: &mut dyn FnMut() -> (Vec<f64>, Vec<f64>),
    t: f64,
) -> f64 {
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let (r1, r2) = sample();
        let p = ConfigPoint::new(r1.clone(), r2.clone(), t);
        let Ok(v) = velocity(m, &p) else { continue };
        let psi = f(&r1, &r2);
        if psi.norm_sqr() < 1e-8 * evaluate(m, &m.center_configuration(t)).unwrap().norm_sqr() {
            continue;
        }
        let analytic: Vec<f64> = v.v1.iter().chain(&v.v2).copied().collect();
        let fd = fd_velocity(f, &r1, &r2);
        let err = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0 / m.width());
        worst = worst.max(err / scale);
        n += 1;
    }
    worst
}

#[test]
fn velocities_match_finite_differences_of_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let s = Slits {
        sigma0: 1.0,
        a: 4.0,
        kx: 0.5,
        ky: 0.8,
    };
    for comp in [Composition::Symmetrized, Composition::Product] {
        let m = s.model(comp);
        let f = |r1: &[f64], r2: &[f64]| s.total(comp, [r1[0], r1[1]], [r2[0], r2[1]], 1.3);
        let mut sample = || {
            let mut g = || vec![rng.random_range(-7.0..7.0), rng.random_range(-3.0..3.0)];
            (g(), g())
        };
        let e = max_velocity_error(&m, &f, &mut sample, 1.3);
        assert!(e < 1e-6, "{comp:?}: {e}");
    }

    let (omega, a) = (1.0, 2.0);
    let m = WaveModel::oscillator(omega, a).unwrap();
    let t = 0.6;
    let f = |r1: &[f64], r2: &[f64]| {
        let o = |x| oscillator_orbital(omega, a, x, t);
        o(r1[0]) * o(-r2[0]) + o(r2[0]) * o(-r1[0])
    };
    let mut sample = || (vec![rng.random_range(-4.0..4.0)], vec![rng.random_range(-4.0..4.0)]);
    let e = max_velocity_error(&m, &f, &mut sample, t);
    assert!(e < 1e-6, "oscillator: {e}");

    let (kx, ky) = (1.1, 0.4);
    let m = WaveModel::plane_wave(kx, ky).unwrap();
    let f = |r1: &[f64], r2: &[f64]| 2.0 * (kx * (r1[0] - r2[0])).cos() * (I * ky * (r1[1] + r2[1])).exp();
    let mut sample = || {
        let mut g = || vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        (g(), g())
    };
    let e = max_velocity_error(&m, &f, &mut sample, 0.0);
    assert!(e < 1e-6, "plane wave: {e}");
}

#[test]
fn product_velocity_sum_matches_closed_form_derivatives() {
    // v1x + v2x from the analytic derivative of each Gaussian factor.
    let s = Slits {
        sigma0: 0.7,
        a: 2.0,
        kx: 0.9,
        ky: 0.3,
    };
    let m = s.model(Composition::Product);
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let t = rng.random_range(0.0..3.0);
        let (x1, x2) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
        let phi = |x: f64| {
            slit_orbital(s.sigma0, s.a, s.kx, s.ky, x, 0.0, t) + slit_orbital(s.sigma0, s.a, s.kx, s.ky, -x, 0.0, t)
        };
        let dphi = |x: f64| {
            slit_orbital_dx(s.sigma0, s.a, s.kx, s.ky, x, 0.0, t)
                - slit_orbital_dx(s.sigma0, s.a, s.kx, s.ky, -x, 0.0, t)
        };
        let want = (dphi(x1) / phi(x1)).im + (dphi(x2) / phi(x2)).im;
        let Ok(got) = velocity_sum_x(&m, &ConfigPoint::new([x1, 0.0], [x2, 0.0], t)) else {
            continue;
        };
        worst = worst.max((got - want).abs() / want.abs().max(1.0 / s.sigma0));
    }
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn symmetrized_velocity_sum_vanishes_on_antisymmetric_pairs() {
    let m = WaveModel::gaussian_slit(1.0, 5.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
    assert_eq!(velocity_sum_x(&m, &ConfigPoint::new([4.2, 0.0], [-4.2, 0.0], 2.0)).unwrap(), 0.0);
    assert_eq!(velocity_sum_x(&m, &ConfigPoint::new([4.2, 0.0], [-3.0, 0.0], 0.0)).unwrap(), 0.0);
}

/// Trapezoid sum of `|Psi|^2` over a square grid; spectrally accurate for Gaussians.
fn trapezoid_norm(f: impl Fn(f64, f64) -> f64, half: f64, n: usize) -> f64 {
    let h = 2.0 * half / n as f64;
    let mut s = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            s += f(-half + i as f64 * h, -half + j as f64 * h);
        }
    }
    s * h * h
}

#[test]
fn normalization_matches_numerical_integral() {
    let s = Slits {
        sigma0: 1.0,
        a: 1.5,
        kx: 0.3,
        ky: 0.0,
    };
    for comp in [Composition::Symmetrized, Composition::Product] {
        let m = s.model(comp);
        for t in [0.0, 2.0] {
            let integral = trapezoid_norm(|x1, x2| s.total(comp, [x1, 0.0], [x2, 0.0], t).norm_sqr(), 16.0, 800);
            let n = normalization_constant(&m, t).unwrap();
            assert!((n * n * integral - 1.0).abs() < 1e-9, "{comp:?} t={t}: {}", n * n * integral);
        }
    }
    let m = WaveModel::oscillator(1.0, 0.8).unwrap();
    let integral = trapezoid_norm(
        |x1, x2| {
            let o = |x| oscillator_orbital(1.0, 0.8, x, 0.5);
            (o(x1) * o(-x2) + o(x2) * o(-x1)).norm_sqr()
        },
        8.0,
        600,
    );
    let n = normalization_constant(&m, 0.5).unwrap();
    assert!((n * n * integral - 1.0).abs() < 1e-9);
}

#[test]
fn normalization_tends_to_inverse_root_two_for_distant_slits() {
    let m = WaveModel::gaussian_slit(1.0, 40.0, 0.0, 0.0, Composition::Symmetrized).unwrap();
    assert!((normalization_constant(&m, 0.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    let pw = WaveModel::plane_wave(1.0, 1.0).unwrap();
    assert!(normalization_constant(&pw, 0.0).is_err());
}

#[test]
fn free_propagation_kernel_reproduces_time_evolution() {
    // psi(x, t) = ∫ K(x - x', t) psi(x', 0) dx' with K = (2 pi i t)^(-1/2) exp(i (x - x')^2 / 2t).
    let (sigma0, a, kx, ky) = (0.6, 1.5, 0.8, 0.7);
    let m = WaveModel::gaussian_slit(sigma0, a, kx, ky, Composition::Product).unwrap();
    let t = 0.9;
    let phi0 = |x: f64| m.orbital(Slit::A, &[x, 0.0], 0.0) + m.orbital(Slit::B, &[x, 0.0], 0.0);
    let n = 20_000;
    let (lo, hi) = (-a - 12.0 * sigma0, a + 12.0 * sigma0);
    let h = (hi - lo) / n as f64;
    let prefactor = (2.0 * PI * I * t).powf(-0.5);
    let propagate = |x: f64| {
        let mut s = C::new(0.0, 0.0);
        for i in 0..=n {
            let xp = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            s += w * (I * (x - xp).powi(2) / (2.0 * t)).exp() * phi0(xp);
        }
        prefactor * s * h
    };
    for (x1, y1, x2, y2) in [(1.2, 0.0, -0.7, 0.5), (0.3, 1.0, 2.0, -1.5), (-1.9, 0.2, -1.0, 0.0)] {
        let y_phase = |y: f64| (I * (ky * y - ky * ky * t / 2.0)).exp();
        let want = propagate(x1) * y_phase(y1) * propagate(x2) * y_phase(y2);
        let got = evaluate(&m, &ConfigPoint::new([x1, y1], [x2, y2], t)).unwrap();
        assert!((got - want).norm() < 1e-3 * want.norm(), "{got} vs {want}");
    }
}
