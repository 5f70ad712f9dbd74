//! Classical variable-mass ideal-gas cycle.
//!
//! The working gas exchanges matter as well as energy with its reservoirs:
//! gas at the working density is added isothermally at T₁, the gas expands
//! adiabatically to T₂, the same entropy leaves with gas removed at T₂, and an
//! adiabatic compression returns it to the start. The heat carried by a
//! transferred portion is T·ΔS of that portion.
//!
//! Entropy per particle is k_B(s₀ + c_V ln T + ln(V/N)).

use crate::error::{Error, Result};

/// Thermodynamic state of the working gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasState {
    /// Particle number, treated as continuous.
    pub n: f64,
    pub t: f64,
    pub v: f64,
    /// Total entropy.
    pub s: f64,
    /// Heat capacity per particle in units of k_B.
    pub cv: f64,
    pub kb: f64,
}

impl GasState {
    /// Builds the state with S = N k_B(s₀ + c_V ln T + ln(V/N)).
    pub fn new(n: f64, t: f64, v: f64, cv: f64, s0: f64, kb: f64) -> Result<Self> {
        for (name, value) in [("n", n), ("t", t), ("v", v), ("cv", cv), ("kb", kb)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be positive and finite",
                });
            }
        }
        if !s0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "s0",
                value: s0,
                reason: "must be finite",
            });
        }
        let s = n * kb * (s0 + cv * t.ln() + (v / n).ln());
        Ok(GasState { n, t, v, s, cv, kb })
    }

    /// Monatomic gas, c_V = 3/2.
    pub fn monatomic(n: f64, t: f64, v: f64, s0: f64, kb: f64) -> Result<Self> {
        Self::new(n, t, v, 1.5, s0, kb)
    }

    pub fn density(&self) -> f64 {
        self.n / self.v
    }

    pub fn entropy_per_particle(&self) -> f64 {
        self.s / self.n
    }

    pub fn internal_energy(&self) -> f64 {
        self.n * self.cv * self.kb * self.t
    }

    fn scaled(&self, factor: f64) -> Self {
        GasState {
            n: self.n * factor,
            v: self.v * factor,
            s: self.s * factor,
            ..*self
        }
    }

    /// Largest relative mismatch of (N, T, V, S) against `other`.
    pub fn relative_distance(&self, other: &GasState) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        [
            rel(self.n, other.n),
            rel(self.t, other.t),
            rel(self.v, other.v),
            rel(self.s, other.s),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Outcome of an isothermal transfer of gas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer {
    pub state: GasState,
    /// Heat carried by the transferred gas, T·ΔS.
    pub heat: f64,
    /// Entropy carried by the transferred gas.
    pub entropy: f64,
}

/// Outcome of a reversible adiabatic step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticStep {
    pub state: GasState,
    /// Work done by the gas on its surroundings (negative on compression).
    pub work_by_gas: f64,
}

/// Adds a fraction `x` of gas at the working temperature and density.
pub fn isothermal_add(state: &GasState, x: f64) -> Result<Transfer> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x",
            value: x,
            reason: "added fraction must be non-negative",
        });
    }
    let entropy = x * state.s;
    Ok(Transfer {
        state: state.scaled(1.0 + x),
        heat: state.t * entropy,
        entropy,
    })
}

/// Removes gas at the working temperature and density until S = `target_s`.
pub fn isothermal_remove(state: &GasState, target_s: f64) -> Result<Transfer> {
    if !(target_s > 0.0) {
        return Err(Error::ExcessiveRemoval {
            target: target_s,
            available: state.s,
        });
    }
    if target_s > state.s {
        return Err(Error::InvalidParameter {
            name: "target_s",
            value: target_s,
            reason: "removal cannot raise the entropy",
        });
    }
    let entropy = state.s - target_s;
    let mut next = state.scaled(target_s / state.s);
    next.s = target_s;
    Ok(Transfer {
        state: next,
        heat: state.t * entropy,
        entropy,
    })
}

fn adiabat(state: &GasState, t_target: f64) -> AdiabaticStep {
    // V ∝ T^{−c_V} keeps s = S/N fixed
    let v = state.v * (state.t / t_target).powf(state.cv);
    AdiabaticStep {
        state: GasState {
            t: t_target,
            v,
            ..*state
        },
        work_by_gas: state.n * state.cv * state.kb * (state.t - t_target),
    }
}

/// Reversible adiabatic expansion, cooling the gas to `t_target`.
pub fn adiabatic_expand(state: &GasState, t_target: f64) -> Result<AdiabaticStep> {
    if !(t_target > 0.0 && t_target <= state.t) {
        return Err(Error::InvalidParameter {
            name: "t_target",
            value: t_target,
            reason: "expansion must cool the gas",
        });
    }
    Ok(adiabat(state, t_target))
}

/// Reversible adiabatic compression, heating the gas to `t_target`.
pub fn adiabatic_compress(state: &GasState, t_target: f64) -> Result<AdiabaticStep> {
    if !(t_target >= state.t) || !t_target.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t_target",
            value: t_target,
            reason: "compression must heat the gas",
        });
    }
    Ok(adiabat(state, t_target))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalSpec {
    pub t1: f64,
    pub t2: f64,
    /// Relative amount of gas added at T₁.
    pub x: f64,
    /// State at the start of the cycle, at temperature T₁.
    pub initial: GasState,
}

impl ClassicalSpec {
    pub fn new(t2: f64, x: f64, initial: GasState) -> Result<Self> {
        let t1 = initial.t;
        if !(t2 > 0.0 && t2 < t1) {
            return Err(Error::InvalidParameter {
                name: "t2",
                value: t2,
                reason: "need t1 > t2 > 0",
            });
        }
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter {
                name: "x",
                value: x,
                reason: "added fraction must be positive",
            });
        }
        if !(initial.s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "s",
                value: initial.s,
                reason: "initial entropy must be positive to carry heat in",
            });
        }
        Ok(ClassicalSpec { t1, t2, x, initial })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalReport {
    /// Start, then the state after each of the four steps.
    pub states: [GasState; 5],
    /// Heat absorbed with the gas added at T₁.
    pub q_in: f64,
    /// Heat released with the gas removed at T₂.
    pub q_out: f64,
    pub entropy_in: f64,
    pub entropy_out: f64,
    /// Work done by the gas during expansion.
    pub work_expand: f64,
    /// Work done on the gas during compression.
    pub work_compress: f64,
    /// Q_in − Q_out.
    pub w_net: f64,
    pub efficiency: f64,
    /// Largest relative mismatch between the final and initial state.
    pub closure_error: f64,
}

impl ClassicalReport {
    /// Net mechanical work of the two adiabats.
    pub fn mechanical_work(&self) -> f64 {
        self.work_expand - self.work_compress
    }
}

pub fn classical_cycle(spec: &ClassicalSpec) -> Result<ClassicalReport> {
    let s0 = spec.initial;
    let add = isothermal_add(&s0, spec.x)?;
    let expand = adiabatic_expand(&add.state, spec.t2)?;
    let remove = isothermal_remove(&expand.state, s0.s)?;
    let compress = adiabatic_compress(&remove.state, spec.t1)?;
    let end = compress.state;
    let w_net = add.heat - remove.heat;
    Ok(ClassicalReport {
        states: [s0, add.state, expand.state, remove.state, end],
        q_in: add.heat,
        q_out: remove.heat,
        entropy_in: add.entropy,
        entropy_out: remove.entropy,
        work_expand: expand.work_by_gas,
        work_compress: -compress.work_by_gas,
        w_net,
        efficiency: w_net / add.heat,
        closure_error: end.relative_distance(&s0),
    })
}
