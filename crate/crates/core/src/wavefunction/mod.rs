//! Analytic two-particle wave functions for the two-slit device.
//!
//! Three families are provided:
//!
//! * [`Variant::PlaneWavePair`]: plane waves `exp{i(k_x x + k_y y)}` leaving each slit,
//!   symmetrized into `2 cos{k_x(x1 - x2)} exp{i[k_y(y1 + y2) - (hbar/m)(k_x^2 + k_y^2) t]}`.
//! * [`Variant::OscillatorPair`]: coherent harmonic-oscillator packets oscillating
//!   between `x = a` and `x = -a`, one dimension per particle.
//! * [`Variant::GaussianSlit`]: freely spreading Gaussian packets centred on the slits
//!   at `x = ±a`, composed either as a symmetrized boson pair or as the product of
//!   single-particle slit superpositions.
//!
//! The packet leaving slit B is always the mirror image of the one leaving slit A
//! through the plane `x = 0`. Amplitudes are returned unnormalized;
//! [`normalization_constant`] supplies the factor where integrals need it.

mod gaussian;

pub use gaussian::QuadraticExponent;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest per-particle dimension of any model.
pub const MAX_DIM: usize = 2;

pub type ComplexAmplitude = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalConstants {
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn validate(&self) -> Result<()> {
        positive("constants.hbar", self.hbar)?;
        positive("constants.mass", self.mass)
    }

    /// `hbar / m`.
    pub fn hbar_over_m(&self) -> f64 {
        self.hbar / self.mass
    }
}

/// How the two slit packets are combined into a two-particle state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composition {
    /// `psi_A(r1) psi_B(r2) + psi_A(r2) psi_B(r1)`
    Symmetrized,
    /// `[psi_A(r1) + psi_B(r1)] [psi_A(r2) + psi_B(r2)]`
    Product,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum Variant {
    PlaneWavePair {
        kx: f64,
        ky: f64,
    },
    OscillatorPair {
        omega: f64,
        a: f64,
    },
    GaussianSlit {
        sigma0: f64,
        a: f64,
        #[serde(default)]
        kx: f64,
        #[serde(default)]
        ky: f64,
        composition: Composition,
    },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::PlaneWavePair { .. } => "plane_wave_pair",
            Variant::OscillatorPair { .. } => "oscillator_pair",
            Variant::GaussianSlit {
                composition: Composition::Symmetrized,
                ..
            } => "gaussian_slit/symmetrized",
            Variant::GaussianSlit {
                composition: Composition::Product,
                ..
            } => "gaussian_slit/product",
        }
    }
}

/// Which slit a single-particle packet leaves from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slit {
    A,
    B,
}

/// A parameterized two-particle wave function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveModel {
    #[serde(default)]
    pub constants: PhysicalConstants,
    #[serde(flatten)]
    pub variant: Variant,
}

/// A point `(r1, r2)` of configuration space at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigPoint {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub t: f64,
}

impl ConfigPoint {
    pub fn new(r1: impl Into<Vec<f64>>, r2: impl Into<Vec<f64>>, t: f64) -> Self {
        Self {
            r1: r1.into(),
            r2: r2.into(),
            t,
        }
    }

    /// Particles interchanged.
    pub fn exchanged(&self) -> Self {
        Self {
            r1: self.r2.clone(),
            r2: self.r1.clone(),
            t: self.t,
        }
    }

    /// Both particles reflected through the plane `x = 0`.
    pub fn reflected(&self) -> Self {
        let flip = |r: &[f64]| {
            let mut r = r.to_vec();
            r[0] = -r[0];
            r
        };
        Self {
            r1: flip(&self.r1),
            r2: flip(&self.r2),
            t: self.t,
        }
    }

    pub fn dim(&self) -> usize {
        self.r1.len()
    }
}

/// Amplitude and gradients sharing a common real scale factor `exp(log_scale)`.
///
/// Gaussian factors far from the packet centres under- or overflow long before
/// the ratios needed by the guidance field lose precision, so everything is
/// carried relative to the largest term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledAmplitude {
    pub log_scale: f64,
    pub value: Complex64,
    pub grad1: [Complex64; MAX_DIM],
    pub grad2: [Complex64; MAX_DIM],
}

impl ScaledAmplitude {
    pub fn amplitude(&self) -> Complex64 {
        self.value * self.log_scale.exp()
    }

    /// `ln |psi|^2`, `-inf` at an exact node.
    pub fn log_density(&self) -> f64 {
        2.0 * self.log_scale + self.value.norm_sqr().ln()
    }

    pub fn scaled_by(mut self, c: Complex64) -> Self {
        self.value *= c;
        for g in self.grad1.iter_mut().chain(self.grad2.iter_mut()) {
            *g *= c;
        }
        self
    }
}

/// Anything that can act as a guiding wave for a particle pair.
pub trait WaveFunction: Sync {
    fn dim(&self) -> usize;

    fn constants(&self) -> PhysicalConstants;

    /// Amplitude and its gradients with respect to each particle.
    /// Only the first `dim()` gradient components are meaningful.
    fn scaled_amplitude(&self, r1: &[f64], r2: &[f64], t: f64) -> ScaledAmplitude;

    /// `ln |psi|^2` at a representative high-density configuration at time `t`.
    fn reference_log_density(&self, t: f64) -> f64;
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive and finite, got {v}")))
    }
}

fn finite(field: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite, got {v}")))
    }
}

impl WaveModel {
    pub fn new(constants: PhysicalConstants, variant: Variant) -> Result<Self> {
        let model = Self { constants, variant };
        model.validate()?;
        Ok(model)
    }

    pub fn plane_wave(kx: f64, ky: f64) -> Result<Self> {
        Self::new(Default::default(), Variant::PlaneWavePair { kx, ky })
    }

    pub fn oscillator(omega: f64, a: f64) -> Result<Self> {
        Self::new(Default::default(), Variant::OscillatorPair { omega, a })
    }

    pub fn gaussian_slit(
        sigma0: f64,
        a: f64,
        kx: f64,
        ky: f64,
        composition: Composition,
    ) -> Result<Self> {
        Self::new(
            Default::default(),
            Variant::GaussianSlit {
                sigma0,
                a,
                kx,
                ky,
                composition,
            },
        )
    }

    pub fn with_constants(self, constants: PhysicalConstants) -> Result<Self> {
        Self::new(constants, self.variant)
    }

    pub fn validate(&self) -> Result<()> {
        self.constants.validate()?;
        match self.variant {
            Variant::PlaneWavePair { kx, ky } => {
                finite("model.kx", kx)?;
                finite("model.ky", ky)
            }
            Variant::OscillatorPair { omega, a } => {
                positive("model.omega", omega)?;
                positive("model.a", a)
            }
            Variant::GaussianSlit {
                sigma0, a, kx, ky, ..
            } => {
                positive("model.sigma0", sigma0)?;
                positive("model.a", a)?;
                finite("model.kx", kx)?;
                finite("model.ky", ky)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        self.variant.name()
    }

    pub fn is_normalizable(&self) -> bool {
        !matches!(self.variant, Variant::PlaneWavePair { .. })
    }

    /// Natural length scale: the initial packet width, or `1/|k|` for plane waves.
    pub fn width(&self) -> f64 {
        match self.variant {
            Variant::PlaneWavePair { kx, ky } => {
                let k = kx.hypot(ky);
                if k > 0.0 {
                    1.0 / k
                } else {
                    1.0
                }
            }
            Variant::OscillatorPair { omega, .. } => self.oscillator_width(omega),
            Variant::GaussianSlit { sigma0, .. } => sigma0,
        }
    }

    fn oscillator_width(&self, omega: f64) -> f64 {
        (self.constants.hbar / (2.0 * self.constants.mass * omega)).sqrt()
    }

    /// `sigma_t = sigma0 (1 + i hbar t / 2 m sigma0^2)`.
    pub fn sigma_t(&self, t: f64) -> Option<Complex64> {
        match self.variant {
            Variant::GaussianSlit { sigma0, .. } => Some(Complex64::new(
                sigma0,
                self.constants.hbar_over_m() * t / (2.0 * sigma0),
            )),
            _ => None,
        }
    }

    /// Centre `x_c(t)` of the slit-A packet and its `|psi|^2` standard deviation.
    /// The slit-B packet sits at `-x_c(t)` with the same width.
    pub fn packet_center_and_width(&self, t: f64) -> (f64, f64) {
        match self.variant {
            Variant::PlaneWavePair { .. } => (0.0, f64::INFINITY),
            Variant::OscillatorPair { omega, a } => {
                ((omega * t).cos() * a, self.oscillator_width(omega))
            }
            Variant::GaussianSlit { a, kx, .. } => {
                let sigma_t = self.sigma_t(t).unwrap();
                (a + self.constants.hbar_over_m() * kx * t, sigma_t.norm())
            }
        }
    }

    /// Interval of `x` outside of which every `|psi|^2` factor is below
    /// `1e-16` of its peak (ten packet widths beyond either centre).
    pub fn x_support(&self, t: f64) -> Option<(f64, f64)> {
        if !self.is_normalizable() {
            return None;
        }
        let (c, w) = self.packet_center_and_width(t);
        let half = c.abs() + 10.0 * w;
        Some((-half, half))
    }

    /// Configuration with particle 1 at the slit-A packet centre and particle 2
    /// at the slit-B packet centre (`y = 0`).
    pub fn center_configuration(&self, t: f64) -> ConfigPoint {
        let (c, _) = match self.variant {
            Variant::PlaneWavePair { .. } => (0.0, 0.0),
            _ => self.packet_center_and_width(t),
        };
        let mut r1 = vec![0.0; self.dim()];
        let mut r2 = vec![0.0; self.dim()];
        r1[0] = c;
        r2[0] = -c;
        ConfigPoint::new(r1, r2, t)
    }

    /// Dimension of each particle's coordinate vector.
    pub fn dim(&self) -> usize {
        match self.variant {
            Variant::OscillatorPair { .. } => 1,
            _ => 2,
        }
    }

    fn check_point(&self, p: &ConfigPoint) -> Result<()> {
        let d = self.dim();
        for found in [p.r1.len(), p.r2.len()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        Ok(())
    }

    /// `ln psi_A(r, t)` and `∇ ln psi_A`, exactly as the single-particle forms are written.
    fn log_orbital_a(&self, r: &[f64], t: f64) -> (Complex64, [Complex64; MAX_DIM]) {
        let hm = self.constants.hbar_over_m();
        match self.variant {
            Variant::PlaneWavePair { kx, ky } => {
                let phase = kx * r[0] + ky * r[1] - 0.5 * hm * (kx * kx + ky * ky) * t;
                (I * phase, [I * kx, I * ky])
            }
            Variant::OscillatorPair { omega, a } => {
                let k = self.constants.mass * omega / self.constants.hbar;
                let x = r[0];
                let (s1, c1) = (omega * t).sin_cos();
                let s2 = (2.0 * omega * t).sin();
                let dx = x - a * c1;
                let prefactor = 0.25 * (k / PI).ln();
                let log = prefactor
                    - 0.5 * k * dx * dx
                    - 0.5 * I * (omega * t + 0.5 * k * (4.0 * x * a * s1 - a * a * s2));
                let dlog = Complex64::new(-k * dx, -k * a * s1);
                (log, [dlog, Complex64::from(0.0)])
            }
            Variant::GaussianSlit {
                sigma0, a, kx, ky, ..
            } => {
                let sigma_t = self.sigma_t(t).unwrap();
                let (x, y) = (r[0], r[1]);
                let shift = x - a - hm * kx * t;
                let denom = 4.0 * sigma0 * sigma_t;
                let prefactor = -0.25 * (2.0 * PI).ln() - 0.5 * sigma_t.ln();
                let phase = kx * (x - a - 0.5 * hm * kx * t) + ky * y - 0.5 * hm * ky * ky * t;
                let log = prefactor - shift * shift / denom + I * phase;
                let dx = -2.0 * shift / denom + I * kx;
                (log, [dx, I * ky])
            }
        }
    }

    /// `psi_B(r) = psi_A(r')` with `x' = -x`.
    pub(crate) fn log_orbital(&self, slit: Slit, r: &[f64], t: f64) -> (Complex64, [Complex64; MAX_DIM]) {
        match slit {
            Slit::A => self.log_orbital_a(r, t),
            Slit::B => {
                let mut mirrored = [0.0; MAX_DIM];
                mirrored[..r.len()].copy_from_slice(r);
                mirrored[0] = -mirrored[0];
                let (log, mut grad) = self.log_orbital_a(&mirrored[..r.len()], t);
                grad[0] = -grad[0];
                (log, grad)
            }
        }
    }

    /// Single-particle packet leaving `slit`, evaluated at `r`.
    pub fn orbital(&self, slit: Slit, r: &[f64], t: f64) -> Complex64 {
        self.log_orbital(slit, r, t).0.exp()
    }

    /// The x-dependent part of `psi_A` as a complex Gaussian exponent.
    /// `None` for plane waves.
    pub fn x_exponent_a(&self, t: f64) -> Option<QuadraticExponent> {
        match self.variant {
            Variant::PlaneWavePair { .. } => None,
            Variant::OscillatorPair { omega, a } => {
                let k = self.constants.mass * omega / self.constants.hbar;
                let (s1, c1) = (omega * t).sin_cos();
                let s2 = (2.0 * omega * t).sin();
                let c = a * c1;
                Some(QuadraticExponent {
                    quad: (0.5 * k).into(),
                    lin: Complex64::new(k * c, -k * a * s1),
                    konst: Complex64::new(
                        0.25 * (k / PI).ln() - 0.5 * k * c * c,
                        -0.5 * (omega * t - 0.5 * k * a * a * s2),
                    ),
                })
            }
            Variant::GaussianSlit { sigma0, a, kx, .. } => {
                let hm = self.constants.hbar_over_m();
                let sigma_t = self.sigma_t(t).unwrap();
                let c = a + hm * kx * t;
                let inv = 1.0 / (4.0 * sigma0 * sigma_t);
                Some(QuadraticExponent {
                    quad: inv,
                    lin: 2.0 * c * inv + I * kx,
                    konst: -c * c * inv - 0.25 * (2.0 * PI).ln() - 0.5 * sigma_t.ln()
                        - I * kx * (a + 0.5 * hm * kx * t),
                })
            }
        }
    }

    fn scaled_plane_wave(&self, kx: f64, ky: f64, r1: &[f64], r2: &[f64], t: f64) -> ScaledAmplitude {
        let hm = self.constants.hbar_over_m();
        let u = kx * (r1[0] - r2[0]);
        let theta = ky * (r1[1] + r2[1]) - hm * (kx * kx + ky * ky) * t;
        let carrier = Complex64::from_polar(1.0, theta);
        let value = 2.0 * u.cos() * carrier;
        let dx = -2.0 * kx * u.sin() * carrier;
        ScaledAmplitude {
            log_scale: 0.0,
            value,
            grad1: [dx, I * ky * value],
            grad2: [-dx, I * ky * value],
        }
    }

    fn scaled_composite(&self, composition: Composition, r1: &[f64], r2: &[f64], t: f64) -> ScaledAmplitude {
        let (la1, ga1) = self.log_orbital(Slit::A, r1, t);
        let (lb1, gb1) = self.log_orbital(Slit::B, r1, t);
        let (la2, ga2) = self.log_orbital(Slit::A, r2, t);
        let (lb2, gb2) = self.log_orbital(Slit::B, r2, t);
        // (log term, grad wrt r1, grad wrt r2)
        let mut terms = [(la1 + lb2, ga1, gb2), (la2 + lb1, gb1, ga2), (la1 + la2, ga1, ga2), (lb1 + lb2, gb1, gb2)];
        let n = match composition {
            Composition::Symmetrized => 2,
            Composition::Product => 4,
        };
        let terms = &mut terms[..n];
        let log_scale = terms
            .iter()
            .map(|(l, _, _)| l.re)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out = ScaledAmplitude {
            log_scale,
            value: 0.0.into(),
            grad1: [0.0.into(); MAX_DIM],
            grad2: [0.0.into(); MAX_DIM],
        };
        for (l, g1, g2) in terms.iter() {
            let w = (l - log_scale).exp();
            out.value += w;
            for k in 0..MAX_DIM {
                out.grad1[k] += w * g1[k];
                out.grad2[k] += w * g2[k];
            }
        }
        out
    }

    /// Scaled amplitude at a point given as two coordinate slices.
    pub fn scaled(&self, r1: &[f64], r2: &[f64], t: f64) -> ScaledAmplitude {
        match self.variant {
            Variant::PlaneWavePair { kx, ky } => self.scaled_plane_wave(kx, ky, r1, r2, t),
            Variant::OscillatorPair { .. } => self.scaled_composite(Composition::Symmetrized, r1, r2, t),
            Variant::GaussianSlit { composition, .. } => self.scaled_composite(composition, r1, r2, t),
        }
    }

    /// `ln` of the single-particle slit-sum norm `∫|psi_A + psi_B|^2 dx` and the
    /// overlap `<psi_A|psi_B>` (x part only; the y factor is a common phase).
    fn overlap_ab(&self, t: f64) -> Result<Complex64> {
        let a = self
            .x_exponent_a(t)
            .ok_or(Error::NotNormalizable(self.name()))?;
        Ok(a.overlap(&a.reflected()))
    }

    /// `∫|Psi|^2` over the x coordinates of both particles.
    pub fn total_weight(&self, t: f64) -> Result<f64> {
        let ov = self.overlap_ab(t)?;
        Ok(match self.variant {
            Variant::GaussianSlit {
                composition: Composition::Product,
                ..
            } => {
                let single = 2.0 * (1.0 + ov.re);
                single * single
            }
            _ => 2.0 * (1.0 + ov.norm_sqr()),
        })
    }
}

impl WaveFunction for WaveModel {
    fn dim(&self) -> usize {
        WaveModel::dim(self)
    }

    fn constants(&self) -> PhysicalConstants {
        self.constants
    }

    fn scaled_amplitude(&self, r1: &[f64], r2: &[f64], t: f64) -> ScaledAmplitude {
        self.scaled(r1, r2, t)
    }

    fn reference_log_density(&self, t: f64) -> f64 {
        let p = self.center_configuration(t);
        self.scaled(&p.r1, &p.r2, t).log_density()
    }
}

/// Unnormalized `Psi(r1, r2; t)`.
pub fn evaluate(model: &WaveModel, p: &ConfigPoint) -> Result<ComplexAmplitude> {
    model.check_point(p)?;
    Ok(model.scaled(&p.r1, &p.r2, p.t).amplitude())
}

/// Closed-form `(∇1 Psi, ∇2 Psi)`.
pub fn gradient(model: &WaveModel, p: &ConfigPoint) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    model.check_point(p)?;
    let s = model.scaled(&p.r1, &p.r2, p.t);
    let scale = s.log_scale.exp();
    let d = model.dim();
    Ok((
        s.grad1[..d].iter().map(|g| g * scale).collect(),
        s.grad2[..d].iter().map(|g| g * scale).collect(),
    ))
}

pub fn norm_squared_density(model: &WaveModel, p: &ConfigPoint) -> Result<f64> {
    Ok(evaluate(model, p)?.norm_sqr())
}

/// `N` such that `N^2 ∫|Psi|^2 = 1`, integrating over the x coordinates.
///
/// The y factor of the Gaussian slit packets is a plane wave with uniform
/// modulus, so the integral is per unit y-extent of each particle.
pub fn normalization_constant(model: &WaveModel, t: f64) -> Result<f64> {
    Ok(model.total_weight(t)?.sqrt().recip())
}
