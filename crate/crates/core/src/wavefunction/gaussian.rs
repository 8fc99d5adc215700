//! Closed-form integrals of complex Gaussians `exp(-q x^2 + l x + c)`.

use std::f64::consts::PI;

use num_complex::Complex64;

/// Exponent of a one-dimensional complex Gaussian, `-quad * x^2 + lin * x + konst`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticExponent {
    pub quad: Complex64,
    pub lin: Complex64,
    pub konst: Complex64,
}

impl QuadraticExponent {
    pub fn eval(&self, x: f64) -> Complex64 {
        (-self.quad * x * x + self.lin * x + self.konst).exp()
    }

    /// The function reflected through `x = 0`.
    pub fn reflected(&self) -> Self {
        Self {
            lin: -self.lin,
            ..*self
        }
    }

    /// `<self|other> = ∫ conj(self) * other dx`. Requires `Re(quad) > 0` for both.
    pub fn overlap(&self, other: &Self) -> Complex64 {
        let q = self.quad.conj() + other.quad;
        let l = self.lin.conj() + other.lin;
        let c = self.konst.conj() + other.konst;
        (Complex64::from(PI) / q).sqrt() * (l * l / (4.0 * q) + c).exp()
    }

    pub fn norm_squared(&self) -> f64 {
        self.overlap(self).re
    }
}
