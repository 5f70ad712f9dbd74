//! The PT-symmetric spin-½ Hamiltonian H = B·σ with complex field
//! B = (J cos φ, −J sin φ, iγJ), and its biorthonormal eigensystem.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{dirac_norm_sqr, inner, ComplexMatrix2, Vector2};

/// Non-Hermiticity strength γ and the energy/temperature conversion k_B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    gamma: f64,
    kb: f64,
}

impl SystemParams {
    pub fn new(gamma: f64) -> Result<Self> {
        Self::with_kb(gamma, 1.0)
    }

    pub fn with_kb(gamma: f64, kb: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma.abs() >= 1.0 {
            return Err(Error::ExceptionalPoint { gamma });
        }
        if !(kb.is_finite() && kb > 0.0) {
            return Err(Error::InvalidParameter {
                name: "kb",
                value: kb,
                reason: "must be positive and finite",
            });
        }
        Ok(Self { gamma, kb })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kb(&self) -> f64 {
        self.kb
    }

    /// √(1−γ²), the factor every level energy carries.
    pub fn spectral_factor(&self) -> f64 {
        (1.0 - self.gamma * self.gamma).sqrt()
    }

    pub fn theta(&self) -> Complex64 {
        theta_branch(self.gamma)
    }
}

/// A point (J, φ) in the control plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPoint {
    pub j: f64,
    pub phi: f64,
}

impl ControlPoint {
    pub fn new(j: f64, phi: f64) -> Result<Self> {
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::NonPositiveCoupling { j });
        }
        if !phi.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi",
                value: phi,
                reason: "must be finite",
            });
        }
        Ok(Self { j, phi })
    }
}

/// Level label λ = ±.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Plus, Branch::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn theta_branch(gamma: f64) -> Complex64 {
    Complex64::new(FRAC_PI_2, -gamma.atanh())
}

/// Complex angle θ with cos θ = iγ/√(1−γ²) and sin θ = 1/√(1−γ²) > 0.
///
/// The branch θ = π/2 − i·artanh γ reduces to π/2 at γ = 0.
pub fn theta_of_gamma(gamma: f64) -> Result<Complex64> {
    if !gamma.is_finite() || gamma.abs() >= 1.0 {
        return Err(Error::ExceptionalPoint { gamma });
    }
    Ok(theta_branch(gamma))
}

/// H = J√(1−γ²)·[[cos θ, sin θ e^{iφ}], [sin θ e^{−iφ}, −cos θ]].
pub fn build_hamiltonian(params: &SystemParams, pt: &ControlPoint) -> ComplexMatrix2 {
    let theta = params.theta();
    let scale = pt.j * params.spectral_factor();
    let (c, s) = (theta.cos(), theta.sin());
    let e = Complex64::from_polar(1.0, pt.phi);
    ComplexMatrix2::new(c, s * e, s * e.conj(), -c).scale(scale.into())
}

/// H assembled directly as B·σ from the complex field.
pub fn field_hamiltonian(params: &SystemParams, pt: &ControlPoint) -> ComplexMatrix2 {
    let bx = pt.j * pt.phi.cos();
    let by = -pt.j * pt.phi.sin();
    let bz = Complex64::new(0.0, params.gamma() * pt.j);
    ComplexMatrix2::sigma_x().scale(bx.into())
        + ComplexMatrix2::sigma_y().scale(by.into())
        + ComplexMatrix2::sigma_z().scale(bz)
}

/// Frobenius norm of [PT, H] with P = σ_x and T complex conjugation.
///
/// Acting on v, (PT)H v = σ_x H* v* and H(PT) v = H σ_x v*, so the commutator
/// reduces to the ordinary matrix σ_x H* − H σ_x.
pub fn pt_defect(h: &ComplexMatrix2) -> f64 {
    let p = ComplexMatrix2::sigma_x();
    (p * h.conj() - *h * p).frobenius_norm()
}

/// Instantaneous biorthonormal eigensystem of H(J, φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    pub eps_plus: f64,
    pub eps_minus: f64,
    pub psi_plus: Vector2,
    pub psi_minus: Vector2,
    pub eta_plus: Vector2,
    pub eta_minus: Vector2,
    /// Θ = |cos(θ/2)|² + |sin(θ/2)|², the Dirac norm² of either ψ_λ.
    pub dirac_norm_theta: f64,
}

impl EigenSystem {
    pub fn energy(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.eps_plus,
            Branch::Minus => self.eps_minus,
        }
    }

    /// Right eigenvector as written in closed form (biorthonormal, not Dirac-normalized).
    pub fn psi(&self, branch: Branch) -> Vector2 {
        match branch {
            Branch::Plus => self.psi_plus,
            Branch::Minus => self.psi_minus,
        }
    }

    pub fn eta(&self, branch: Branch) -> Vector2 {
        match branch {
            Branch::Plus => self.eta_plus,
            Branch::Minus => self.eta_minus,
        }
    }

    /// ψ_λ/√Θ, the form entering density matrices and Dirac probabilities.
    pub fn psi_normalized(&self, branch: Branch) -> Vector2 {
        let k = Complex64::from(self.dirac_norm_theta.sqrt().recip());
        let v = self.psi(branch);
        [v[0] * k, v[1] * k]
    }

    /// max_{λ,λ'} |⟨η_λ'|ψ_λ⟩ − δ_λλ'|.
    pub fn biorthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in Branch::BOTH {
            for b in Branch::BOTH {
                let delta = if a == b { 1.0 } else { 0.0 };
                let overlap = inner(&self.eta(a), &self.psi(b));
                worst = worst.max((overlap - delta).norm());
            }
        }
        worst
    }

    /// ‖Σ_λ |ψ_λ⟩⟨η_λ| − I‖_F.
    pub fn completeness_defect(&self) -> f64 {
        let sum = ComplexMatrix2::outer(&self.psi_plus, &self.eta_plus)
            + ComplexMatrix2::outer(&self.psi_minus, &self.eta_minus);
        (sum - ComplexMatrix2::identity()).frobenius_norm()
    }
}

pub fn eigensystem(params: &SystemParams, pt: &ControlPoint) -> EigenSystem {
    let half = params.theta() * 0.5;
    let (c, s) = (half.cos(), half.sin());
    let e_minus = Complex64::from_polar(1.0, -pt.phi);
    let e_plus = Complex64::from_polar(1.0, pt.phi);
    let eps = pt.j * params.spectral_factor();
    EigenSystem {
        eps_plus: eps,
        eps_minus: -eps,
        psi_plus: [c, s * e_minus],
        psi_minus: [-s, c * e_minus],
        eta_plus: [c.conj(), (s * e_plus).conj()],
        eta_minus: [-s.conj(), (c * e_plus).conj()],
        dirac_norm_theta: c.norm_sqr() + s.norm_sqr(),
    }
}

/// Rescales `state` to unit Dirac norm.
pub fn dirac_normalize(state: &Vector2) -> Result<Vector2> {
    let n2 = dirac_norm_sqr(state);
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let k = Complex64::from(n2.sqrt().recip());
    Ok([state[0] * k, state[1] * k])
}
