//! 2×2 gate matrices and the standard gate set.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::Amplitude;

/// Elementwise tolerance for the `Q†Q = I` check at construction.
pub const UNITARY_TOL: f64 = 1e-12;

/// A 2×2 complex unitary `[[q11, q12], [q21, q22]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateMatrix {
    pub q11: Amplitude,
    pub q12: Amplitude,
    pub q21: Amplitude,
    pub q22: Amplitude,
}

const fn c(re: f64, im: f64) -> Amplitude {
    Amplitude::new(re, im)
}

impl GateMatrix {
    /// Checked constructor; rejects matrices with `|Q†Q - I| > 1e-12` anywhere.
    pub fn new(q11: Amplitude, q12: Amplitude, q21: Amplitude, q22: Amplitude) -> Result<Self> {
        let g = Self::new_unchecked(q11, q12, q21, q22);
        if !g.to_rows().iter().all(|a| a.is_finite()) {
            return Err(Error::NotUnitary { deviation: f64::NAN });
        }
        let deviation = g.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(g)
    }

    pub const fn new_unchecked(
        q11: Amplitude,
        q12: Amplitude,
        q21: Amplitude,
        q22: Amplitude,
    ) -> Self {
        Self { q11, q12, q21, q22 }
    }

    /// Row-major `[q11, q12, q21, q22]`.
    pub fn from_rows(m: [Amplitude; 4]) -> Result<Self> {
        Self::new(m[0], m[1], m[2], m[3])
    }

    pub fn to_rows(&self) -> [Amplitude; 4] {
        [self.q11, self.q12, self.q21, self.q22]
    }

    /// Largest elementwise magnitude of `Q†Q - I`.
    pub fn unitarity_deviation(&self) -> f64 {
        let d = self.dagger().mul(self);
        let id = Self::identity();
        d.to_rows()
            .iter()
            .zip(id.to_rows())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn dagger(&self) -> Self {
        Self::new_unchecked(self.q11.conj(), self.q21.conj(), self.q12.conj(), self.q22.conj())
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        Self::new_unchecked(
            self.q11 * rhs.q11 + self.q12 * rhs.q21,
            self.q11 * rhs.q12 + self.q12 * rhs.q22,
            self.q21 * rhs.q11 + self.q22 * rhs.q21,
            self.q21 * rhs.q12 + self.q22 * rhs.q22,
        )
    }

    /// Returns `(Q·[a0, a1])`, the single pair update.
    #[inline(always)]
    pub fn apply(&self, a0: Amplitude, a1: Amplitude) -> (Amplitude, Amplitude) {
        (self.q11 * a0 + self.q12 * a1, self.q21 * a0 + self.q22 * a1)
    }

    pub const fn identity() -> Self {
        Self::new_unchecked(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))
    }

    pub const fn h() -> Self {
        let s = FRAC_1_SQRT_2;
        Self::new_unchecked(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))
    }

    pub const fn x() -> Self {
        Self::new_unchecked(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
    }

    pub const fn y() -> Self {
        Self::new_unchecked(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
    }

    pub const fn z() -> Self {
        Self::new_unchecked(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
    }

    /// `diag(1, e^{iθ})`.
    pub fn phase(theta: f64) -> Self {
        Self::new_unchecked(
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Amplitude::from_polar(1.0, theta),
        )
    }

    /// `R_j = diag(1, e^{2πi / 2^j})`.
    pub fn rk(j: u32) -> Self {
        match j {
            // exact entries where the angle is a multiple of π/2
            0 => Self::identity(),
            1 => Self::z(),
            2 => Self::new_unchecked(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)),
            _ => Self::phase(2.0 * PI / pow2f(j)),
        }
    }

    /// `R_j†`, the inverse phase used by the inverse Fourier transform.
    pub fn rk_dagger(j: u32) -> Self {
        Self::rk(j).dagger()
    }

    pub fn rx(theta: f64) -> Self {
        let (s, co) = libm::sincos(theta / 2.0);
        Self::new_unchecked(c(co, 0.0), c(0.0, -s), c(0.0, -s), c(co, 0.0))
    }

    pub fn ry(theta: f64) -> Self {
        let (s, co) = libm::sincos(theta / 2.0);
        Self::new_unchecked(c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0))
    }

    pub fn rz(theta: f64) -> Self {
        Self::new_unchecked(
            Amplitude::from_polar(1.0, -theta / 2.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Amplitude::from_polar(1.0, theta / 2.0),
        )
    }

    /// General rotation `U(θ, φ, λ)`; every single-qubit unitary is a global
    /// phase times one of these.
    pub fn u3(theta: f64, phi: f64, lambda: f64) -> Self {
        let (s, co) = libm::sincos(theta / 2.0);
        Self::new_unchecked(
            c(co, 0.0),
            -Amplitude::from_polar(s, lambda),
            Amplitude::from_polar(s, phi),
            Amplitude::from_polar(co, phi + lambda),
        )
    }
}

fn pow2f(j: u32) -> f64 {
    libm::exp2(j as f64)
}
