//! Dense 2×2 complex matrices and 2-vectors.
//!
//! Everything in the two-level problem is 2×2, so a fixed-size row-major
//! array beats a general linear-algebra dependency on both speed and clarity.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

pub type Vector2 = [Complex64; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMatrix2 {
    pub m: [[Complex64; 2]; 2],
}

impl ComplexMatrix2 {
    pub const fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self {
            m: [[a, b], [c, d]],
        }
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn sigma_x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn sigma_y() -> Self {
        Self::new(ZERO, -I, I, ZERO)
    }

    pub fn sigma_z() -> Self {
        Self::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        Self::new(a, ZERO, ZERO, d)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn entries(&self) -> [Complex64; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        self.map(|z| z * s)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self::new(
            f(self.m[0][0]),
            f(self.m[0][1]),
            f(self.m[1][0]),
            f(self.m[1][1]),
        )
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn dagger(&self) -> Self {
        self.transpose().conj()
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.entries()
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn apply(&self, v: &Vector2) -> Vector2 {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Outer product |a⟩⟨b| (b is conjugated).
    pub fn outer(a: &Vector2, b: &Vector2) -> Self {
        Self::new(
            a[0] * b[0].conj(),
            a[0] * b[1].conj(),
            a[1] * b[0].conj(),
            a[1] * b[1].conj(),
        )
    }

    /// exp(−i·A·t) in closed form.
    ///
    /// Writes A = m·I + N with N traceless, so N² = q²·I and
    /// exp(−iAt) = e^{−imt}·[cos(qt)·I − i·t·sinc(qt)·N]. Both cos(qt) and
    /// t·sinc(qt) are even in q, so the branch of q is irrelevant.
    pub fn exp_neg_i(&self, t: f64) -> Self {
        let m = self.trace() * 0.5;
        let n = *self - Self::identity().scale(m);
        let q2 = n.m[0][0] * n.m[0][0] + n.m[0][1] * n.m[1][0];
        let q = q2.sqrt();
        let qt = q * t;
        let cos = qt.cos();
        let sin_over_q = t * sinc(qt);
        let phase = (-I * m * t).exp();
        (Self::identity().scale(cos) - n.scale(I * sin_over_q)).scale(phase)
    }
}

/// sin(z)/z with the removable singularity filled in.
pub fn sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        ONE - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

impl Add for ComplexMatrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(
            self.m[0][0] + rhs.m[0][0],
            self.m[0][1] + rhs.m[0][1],
            self.m[1][0] + rhs.m[1][0],
            self.m[1][1] + rhs.m[1][1],
        )
    }
}

impl Sub for ComplexMatrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ComplexMatrix2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.map(|z| -z)
    }
}

impl Mul for ComplexMatrix2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// Conjugate-linear inner product ⟨a|b⟩ = Σ a_k* b_k.
pub fn inner(a: &Vector2, b: &Vector2) -> Complex64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

pub fn dirac_norm_sqr(v: &Vector2) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}
