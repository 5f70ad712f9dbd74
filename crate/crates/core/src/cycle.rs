//! The four-corner variable-mass Otto cycle.
//!
//! Corners A(J₁, φ₁), B(J₁, φ₂), C(J₂, φ₂), D(J₂, φ₁) are joined by two
//! isospectrum legs (A→B, C→D), where sweeping φ moves population through the
//! imaginary adiabatic phase, and two level-shift legs (B→C, D→A), where
//! changing J rescales the spectrum at fixed populations. Every leg is a
//! generalized adiabatic passage of the non-Hermitian dimer.
//!
//! Corner states come from the thermodynamic state functions and process
//! deltas from line integrals. The [`table`] submodule holds the symbolic
//! closed forms used to cross-check both.

use std::fmt;

use crate::error::{Error, Result};
use crate::evolve::{exact_populations, phase_locked_omega, xi_factor, DriveSegment};
use crate::model::{ControlPoint, SystemParams};
use crate::thermo::{
    gibbs_entropy_line_integral, heat_line_integral, observe, path_integrals, work_line_integral,
    ControlPath, MixedState, Preparation, SpectralTemperature, ThermoObservables,
};

/// Parameters of one Otto cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OttoSpec {
    pub j1: f64,
    pub j2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub p0: f64,
    pub params: SystemParams,
}

impl OttoSpec {
    pub fn new(
        params: SystemParams,
        j1: f64,
        j2: f64,
        phi1: f64,
        phi2: f64,
        p0: f64,
    ) -> Result<Self> {
        if !(j2 > 0.0) || !j2.is_finite() {
            return Err(Error::NonPositiveCoupling { j: j2 });
        }
        if !(j1 > j2) || !j1.is_finite() {
            return Err(Error::InvalidParameter {
                name: "j1",
                value: j1,
                reason: "must exceed j2",
            });
        }
        if !phi1.is_finite() || !phi2.is_finite() || phi1 == phi2 {
            return Err(Error::InvalidParameter {
                name: "phi2",
                value: phi2,
                reason: "must be finite and differ from phi1",
            });
        }
        Preparation::new(p0, phi1)?;
        Ok(OttoSpec {
            j1,
            j2,
            phi1,
            phi2,
            p0,
            params,
        })
    }

    /// ξ = exp{γ(φ₂ − φ₁)/√(1−γ²)}.
    pub fn xi(&self) -> f64 {
        xi_factor(&self.params, self.phi2 - self.phi1)
    }

    pub fn preparation(&self) -> Preparation {
        Preparation {
            p0: self.p0,
            phi0: self.phi1,
        }
    }

    pub fn point(&self, corner: Corner) -> ControlPoint {
        let (j, phi) = match corner {
            Corner::A => (self.j1, self.phi1),
            Corner::B => (self.j1, self.phi2),
            Corner::C => (self.j2, self.phi2),
            Corner::D => (self.j2, self.phi1),
        };
        ControlPoint { j, phi }
    }

    /// The straight leg between two corners.
    pub fn leg_path(&self, leg: Leg) -> ControlPath {
        ControlPath::polygon(&[self.point(leg.from), self.point(leg.to)], false)
            .expect("corners of a validated spec")
    }

    /// The closed rectangle in the given orientation, starting at A.
    pub fn path(&self, orientation: Orientation) -> ControlPath {
        let corners: Vec<ControlPoint> = orientation
            .legs()
            .iter()
            .map(|l| self.point(l.from))
            .collect();
        ControlPath::polygon(&corners, true).expect("corners of a validated spec")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Corner {
    A,
    B,
    C,
    D,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::A, Corner::B, Corner::C, Corner::D];

    pub fn label(self) -> &'static str {
        match self {
            Corner::A => "A",
            Corner::B => "B",
            Corner::C => "C",
            Corner::D => "D",
        }
    }

    fn coupling_is_high(self) -> bool {
        matches!(self, Corner::A | Corner::B)
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Kind of stroke. Both are generalized adiabatic passages; the names follow
/// the effect on the level structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LegKind {
    /// φ varies at fixed J: populations change, spectrum does not.
    Isospectrum,
    /// J varies at fixed φ: spectrum changes, populations do not.
    LevelShift,
}

impl LegKind {
    pub fn label(self) -> &'static str {
        match self {
            LegKind::Isospectrum => "isospectrum",
            LegKind::LevelShift => "adiabatic level shift",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Leg {
    pub from: Corner,
    pub to: Corner,
}

impl Leg {
    pub const fn new(from: Corner, to: Corner) -> Self {
        Leg { from, to }
    }

    pub fn kind(self) -> LegKind {
        if self.from.coupling_is_high() == self.to.coupling_is_high() {
            LegKind::Isospectrum
        } else {
            LegKind::LevelShift
        }
    }

    pub fn label(self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.from, self.to)
    }
}

/// Traversal sense of the rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    /// A→B→C→D→A.
    #[default]
    Engine,
    /// A→D→C→B→A.
    Refrigerator,
}

impl Orientation {
    pub fn legs(self) -> [Leg; 4] {
        use Corner::*;
        match self {
            Orientation::Engine => [
                Leg::new(A, B),
                Leg::new(B, C),
                Leg::new(C, D),
                Leg::new(D, A),
            ],
            Orientation::Refrigerator => [
                Leg::new(A, D),
                Leg::new(D, C),
                Leg::new(C, B),
                Leg::new(B, A),
            ],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CornerState {
    pub corner: Corner,
    pub point: ControlPoint,
    pub observables: ThermoObservables,
}

/// Changes of the state parameters across one leg. `dt` is `None` when an
/// endpoint sits at infinite temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessRecord {
    pub leg: Leg,
    pub dt: Option<f64>,
    pub du: f64,
    pub dq: f64,
    pub dw: f64,
    pub ds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Totals {
    pub du: f64,
    pub dq: f64,
    pub dw: f64,
    pub ds: f64,
}

impl Totals {
    fn sum(records: &[ProcessRecord]) -> Self {
        records.iter().fold(Totals::default(), |t, r| Totals {
            du: t.du + r.du,
            dq: t.dq + r.dq,
            dw: t.dw + r.dw,
            ds: t.ds + r.ds,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleReport {
    pub spec: OttoSpec,
    pub orientation: Orientation,
    pub corners: [CornerState; 4],
    pub processes: [ProcessRecord; 4],
    pub totals: Totals,
    /// `None` when no heat is absorbed (ξ = 1).
    pub efficiency: Option<f64>,
}

impl CycleReport {
    /// Net work delivered to the outside, −ΣΔW.
    pub fn work_output(&self) -> f64 {
        -self.totals.dw
    }

    /// Energies and temperatures divided by √(1−γ²), entropies untouched.
    pub fn in_sqrt_units(&self) -> CycleReport {
        let k = 1.0 / self.spec.params.spectral_factor();
        let mut out = self.clone();
        for c in &mut out.corners {
            let o = &mut c.observables;
            o.t = o.t.scaled(k);
            o.u *= k;
            o.eps_plus *= k;
        }
        for p in &mut out.processes {
            p.dt = p.dt.map(|t| t * k);
            p.du *= k;
            p.dq *= k;
            p.dw *= k;
        }
        out.totals.du *= k;
        out.totals.dq *= k;
        out.totals.dw *= k;
        out
    }
}

/// Thermodynamic state at each corner, A through D.
pub fn otto_corner_states(spec: &OttoSpec) -> [CornerState; 4] {
    let prep = spec.preparation();
    Corner::ALL.map(|corner| {
        let point = spec.point(corner);
        let state = MixedState::adiabatic(&spec.params, prep, point);
        CornerState {
            corner,
            point,
            observables: observe(&state, &spec.params),
        }
    })
}

fn corner_state(corners: &[CornerState; 4], corner: Corner) -> &CornerState {
    corners
        .iter()
        .find(|c| c.corner == corner)
        .expect("all corners present")
}

fn process_record(
    spec: &OttoSpec,
    corners: &[CornerState; 4],
    leg: Leg,
    tol: f64,
) -> Result<ProcessRecord> {
    let path = spec.leg_path(leg);
    let prep = spec.preparation();
    let dq = heat_line_integral(&path, &prep, &spec.params, tol)?;
    let dw = work_line_integral(&path, &prep, &spec.params, tol)?;
    let ds = gibbs_entropy_line_integral(&path, &prep, &spec.params, tol)?;
    let (t0, t1) = (
        corner_state(corners, leg.from).observables.t,
        corner_state(corners, leg.to).observables.t,
    );
    let dt = match (t0, t1) {
        (SpectralTemperature::Finite(a), SpectralTemperature::Finite(b)) => Some(b - a),
        _ => None,
    };
    Ok(ProcessRecord {
        leg,
        dt,
        du: dq + dw,
        dq,
        dw,
        ds,
    })
}

/// Per-leg deltas along the engine orientation, by quadrature.
pub fn otto_process_deltas(spec: &OttoSpec, tol: f64) -> Result<[ProcessRecord; 4]> {
    let corners = otto_corner_states(spec);
    let legs = Orientation::Engine.legs();
    let mut out = Vec::with_capacity(4);
    for leg in legs {
        out.push(process_record(spec, &corners, leg, tol)?);
    }
    Ok(out.try_into().expect("four legs"))
}

fn efficiency_from_heats(q_absorbed: f64, q_released: f64, scale: f64) -> Result<f64> {
    if q_absorbed.abs() <= f64::EPSILON * scale {
        return Err(Error::UndefinedEfficiency);
    }
    Ok((q_released + q_absorbed) / q_absorbed)
}

/// η = (Q₁ + Q₂)/Q₂ with Q₂ the heat of the isospectrum leg at J₁ and Q₁
/// that of the leg at J₂, both from quadrature.
pub fn otto_efficiency(spec: &OttoSpec, tol: f64) -> Result<f64> {
    use Corner::*;
    let prep = spec.preparation();
    let q2 = heat_line_integral(&spec.leg_path(Leg::new(A, B)), &prep, &spec.params, tol)?;
    let q1 = heat_line_integral(&spec.leg_path(Leg::new(C, D)), &prep, &spec.params, tol)?;
    efficiency_from_heats(q2, q1, spec.j1 * spec.params.spectral_factor())
}

/// Corner states, process deltas, totals and efficiency for one traversal.
pub fn otto_report(spec: &OttoSpec, orientation: Orientation, tol: f64) -> Result<CycleReport> {
    let corners = otto_corner_states(spec);
    let mut records = Vec::with_capacity(4);
    for leg in orientation.legs() {
        records.push(process_record(spec, &corners, leg, tol)?);
    }
    let processes: [ProcessRecord; 4] = records.try_into().expect("four legs");
    let heat_at = |high: bool| {
        processes
            .iter()
            .find(|p| p.leg.kind() == LegKind::Isospectrum && p.leg.from.coupling_is_high() == high)
            .map(|p| p.dq)
            .expect("two isospectrum legs")
    };
    let efficiency = efficiency_from_heats(
        heat_at(true),
        heat_at(false),
        spec.j1 * spec.params.spectral_factor(),
    )
    .ok();
    Ok(CycleReport {
        spec: *spec,
        orientation,
        corners,
        totals: Totals::sum(&processes),
        processes,
        efficiency,
    })
}

/// Totals of an arbitrary closed loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopReport {
    pub totals: Totals,
    /// ∮ dQ/T.
    pub clausius_entropy: f64,
    /// max ε₊ on the loop, the scale for the state-function checks.
    pub energy_scale: f64,
}

impl LoopReport {
    pub fn work_output(&self) -> f64 {
        -self.totals.dw
    }
}

/// Integrates heat, work and entropy around a closed loop and rejects the
/// result if ΔU or ΔS fail to vanish to `check_tol` relative to the loop's
/// energy scale.
pub fn generic_loop_report(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
    check_tol: f64,
) -> Result<LoopReport> {
    if !path.is_closed() {
        return Err(Error::InvalidPath("loop report needs a closed path".into()));
    }
    let r = path_integrals(path, prep, params, tol)?;
    let scale = path.energy_scale(params).max(1.0);
    let totals = Totals {
        du: r.internal_energy(),
        dq: r.heat,
        dw: r.work,
        ds: r.entropy,
    };
    let limit = check_tol * scale;
    for (quantity, value) in [
        ("internal energy", totals.du),
        ("Gibbs entropy", totals.ds),
        ("Clausius entropy", r.clausius_entropy),
    ] {
        if !(value.abs() <= limit) {
            return Err(Error::StateFunctionViolation { quantity, value });
        }
    }
    Ok(LoopReport {
        totals,
        clausius_entropy: r.clausius_entropy,
        energy_scale: path.energy_scale(params),
    })
}

/// Piecewise-constant drive realizing the engine cycle in time.
#[derive(Debug, Clone, PartialEq)]
pub struct OttoDrive {
    /// Sweep rate used on the isospectrum legs (magnitude).
    pub omega: f64,
    /// Segments for A→B, B→C, C→D, D→A in order.
    pub segments: [DriveSegment; 4],
}

/// Builds the drive with phase-locked sweeps at the given adiabaticity
/// margin. The level-shift legs switch J abruptly; `shift_tau` is the
/// rescaled time ∫J dt spent on each of them.
pub fn otto_drive(spec: &OttoSpec, margin: f64, shift_tau: f64) -> Result<OttoDrive> {
    let dphi = spec.phi2 - spec.phi1;
    let omega = phase_locked_omega(&spec.params, margin, dphi);
    if !(omega > 0.0) || !omega.is_finite() {
        return Err(Error::InvalidParameter {
            name: "margin",
            value: margin,
            reason: "must give a positive finite sweep rate",
        });
    }
    let sweep = omega * dphi.signum();
    let span = dphi.abs() / omega;
    Ok(OttoDrive {
        omega,
        segments: [
            DriveSegment::new(sweep, span, spec.phi1)?,
            DriveSegment::new(0.0, shift_tau, spec.phi2)?,
            DriveSegment::new(-sweep, span, spec.phi2)?,
            DriveSegment::new(0.0, shift_tau, spec.phi1)?,
        ],
    })
}

/// Corner populations (P₊, P₋) under exact evolution of the drive, A to D.
pub fn exact_corner_populations(spec: &OttoSpec, drive: &OttoDrive) -> Result<[(f64, f64); 4]> {
    let mut out = [(spec.p0, 1.0 - spec.p0); 4];
    for (k, slot) in out.iter_mut().enumerate().skip(1) {
        *slot = exact_populations(spec.p0, &spec.params, &drive.segments[..k])?;
    }
    Ok(out)
}

/// Symbolic entries of the two Otto tables. Energies and temperatures are in
/// units of √(1−γ²).
pub mod table {
    use super::{Corner, Leg, OttoSpec};
    use crate::thermo::SpectralTemperature;

    fn temperature(kb: f64, j: f64, log: f64) -> SpectralTemperature {
        if log.abs() <= 8.0 * f64::EPSILON {
            SpectralTemperature::Infinite
        } else {
            SpectralTemperature::Finite(2.0 * j / (kb * log))
        }
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct StateRow {
        pub corner: Corner,
        pub j: f64,
        pub phi: f64,
        pub t: SpectralTemperature,
        pub eps_plus: f64,
        pub p_plus: f64,
        pub p_minus: f64,
        pub u: f64,
        pub s: f64,
    }

    pub fn state_rows(spec: &OttoSpec) -> [StateRow; 4] {
        let (p0, xi, kb) = (spec.p0, spec.xi(), spec.params.kb());
        let odds = (1.0 / p0 - 1.0).ln();
        let shifted = ((1.0 / p0 - 1.0) * xi.powi(-2)).ln();
        let s_ad = -kb * p0 * p0.ln() - kb * (1.0 - p0) * (1.0 - p0).ln();
        let s_bc = -kb * p0 * xi * (p0 * xi).ln() - kb * (1.0 - p0) / xi * ((1.0 - p0) / xi).ln();
        let row_ad = |corner: Corner, j: f64, phi: f64| StateRow {
            corner,
            j,
            phi,
            t: temperature(kb, j, odds),
            eps_plus: j,
            p_plus: p0,
            p_minus: 1.0 - p0,
            u: j * (2.0 * p0 - 1.0),
            s: s_ad,
        };
        let row_bc = |corner: Corner, j: f64, phi: f64| StateRow {
            corner,
            j,
            phi,
            t: temperature(kb, j, shifted),
            eps_plus: j,
            p_plus: p0 * xi,
            p_minus: (1.0 - p0) / xi,
            u: p0 * (xi + 1.0 / xi) * j - j / xi,
            s: s_bc,
        };
        [
            row_ad(Corner::A, spec.j1, spec.phi1),
            row_bc(Corner::B, spec.j1, spec.phi2),
            row_bc(Corner::C, spec.j2, spec.phi2),
            row_ad(Corner::D, spec.j2, spec.phi1),
        ]
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct ProcessRow {
        pub leg: Leg,
        pub dt: Option<f64>,
        pub du: f64,
        pub dq: f64,
        pub dw: f64,
        pub ds: f64,
    }

    pub fn process_rows(spec: &OttoSpec) -> [ProcessRow; 4] {
        use Corner::*;
        let (p0, xi, kb) = (spec.p0, spec.xi(), spec.params.kb());
        let (j1, j2) = (spec.j1, spec.j2);
        let odds = (1.0 / p0 - 1.0).ln();
        let shifted = ((1.0 / p0 - 1.0) * xi.powi(-2)).ln();
        let finite = |x: f64| if x.is_finite() { Some(x) } else { None };
        // ln(p0^{ξ−1} ξ^ξ) and ln[(1−p0)^{1/ξ−1} (1/ξ)^{1/ξ}], expanded
        let upper = (xi - 1.0) * p0.ln() + xi * xi.ln();
        let lower = (1.0 / xi - 1.0) * (1.0 - p0).ln() - xi.ln() / xi;
        let ds = -kb * p0 * upper - kb * (1.0 - p0) * lower;
        let iso = p0 * (xi + 1.0 / xi - 2.0) + (1.0 - 1.0 / xi);
        let shift = p0 * (xi + 1.0 / xi) - 1.0 / xi;
        [
            ProcessRow {
                leg: Leg::new(A, B),
                dt: finite(4.0 * j1 * xi.ln() / (kb * shifted * odds)),
                du: iso * j1,
                dq: iso * j1,
                dw: 0.0,
                ds,
            },
            ProcessRow {
                leg: Leg::new(B, C),
                dt: finite(2.0 * (j2 - j1) / (kb * shifted)),
                du: shift * (j2 - j1),
                dq: 0.0,
                dw: shift * (j2 - j1),
                ds: 0.0,
            },
            ProcessRow {
                leg: Leg::new(C, D),
                dt: finite(-4.0 * j2 * xi.ln() / (kb * shifted * odds)),
                du: -iso * j2,
                dq: -iso * j2,
                dw: 0.0,
                ds: -ds,
            },
            ProcessRow {
                leg: Leg::new(D, A),
                dt: finite(2.0 * (j1 - j2) / (kb * odds)),
                du: (j1 - j2) * (2.0 * p0 - 1.0),
                dq: 0.0,
                dw: (j1 - j2) * (2.0 * p0 - 1.0),
                ds: 0.0,
            },
        ]
    }

    /// Otto efficiency from the table heats.
    pub fn efficiency(spec: &OttoSpec) -> f64 {
        let rows = process_rows(spec);
        (rows[0].dq + rows[2].dq) / rows[0].dq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(gamma: f64, j1: f64, j2: f64, dphi: f64, p0: f64) -> OttoSpec {
        OttoSpec::new(
            SystemParams::new(gamma).unwrap(),
            j1,
            j2,
            0.2,
            0.2 + dphi,
            p0,
        )
        .unwrap()
    }

    #[test]
    fn validation() {
        let p = SystemParams::new(0.3).unwrap();
        assert!(matches!(
            OttoSpec::new(p, 1.0, 2.0, 0.0, 1.0, 0.3),
            Err(Error::InvalidParameter { name: "j1", .. })
        ));
        assert!(matches!(
            OttoSpec::new(p, 1.0, 0.0, 0.0, 1.0, 0.3),
            Err(Error::NonPositiveCoupling { .. })
        ));
        assert!(OttoSpec::new(p, 2.0, 1.0, 1.0, 1.0, 0.3).is_err());
        assert!(OttoSpec::new(p, 2.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn leg_kinds() {
        for leg in Orientation::Engine
            .legs()
            .into_iter()
            .chain(Orientation::Refrigerator.legs())
        {
            let iso = (leg.from == Corner::A && leg.to == Corner::B)
                || (leg.from == Corner::B && leg.to == Corner::A)
                || (leg.from == Corner::C && leg.to == Corner::D)
                || (leg.from == Corner::D && leg.to == Corner::C);
            assert_eq!(leg.kind() == LegKind::Isospectrum, iso, "{leg}");
        }
        assert_eq!(Leg::new(Corner::B, Corner::C).label(), "B->C");
    }

    #[test]
    fn row_a_matches_closed_form() {
        let s = spec(0.4, 2.0, 1.0, 1.0, 0.3);
        let root = s.params.spectral_factor();
        let a = otto_corner_states(&s)[0].observables;
        assert_relative_eq!(
            a.t.value(),
            2.0 * 2.0 * root / (0.7f64 / 0.3).ln(),
            max_relative = 1e-13
        );
        assert_relative_eq!(a.eps_plus, 2.0 * root, max_relative = 1e-15);
        assert_eq!((a.p_plus, a.p_minus), (0.3, 0.7));
        assert_relative_eq!(a.u, 2.0 * root * (0.6 - 1.0), max_relative = 1e-14);
        assert_relative_eq!(
            a.s,
            -(0.3 * 0.3f64.ln() + 0.7 * 0.7f64.ln()),
            max_relative = 1e-14
        );
    }

    #[test]
    fn rows_b_and_c_share_populations() {
        let c = otto_corner_states(&spec(0.5, 3.0, 1.0, 0.7, 0.2));
        assert_eq!(c[1].observables.p_plus, c[2].observables.p_plus);
        assert_eq!(c[1].observables.p_minus, c[2].observables.p_minus);
        assert_eq!(c[1].observables.s, c[2].observables.s);
        assert_eq!(c[0].observables.s, c[3].observables.s);
    }

    #[test]
    fn hermitian_limit_collapses_rows() {
        let c = otto_corner_states(&spec(0.0, 3.0, 1.0, 0.7, 0.2));
        assert_eq!(c[0].observables.p_plus, c[1].observables.p_plus);
        assert_eq!(c[2].observables.s, c[3].observables.s);
    }

    #[test]
    fn process_structure() {
        let s = spec(0.6, 2.0, 0.5, 1.3, 0.25);
        let d = otto_process_deltas(&s, 1e-13).unwrap();
        for r in [d[0], d[2]] {
            assert!(r.dw.abs() < 1e-14);
            assert_relative_eq!(r.dq, r.du, max_relative = 1e-13);
        }
        for r in [d[1], d[3]] {
            assert!(r.dq.abs() < 1e-14);
            assert!(r.ds.abs() < 1e-14);
            assert_relative_eq!(r.dw, r.du, max_relative = 1e-13);
        }
        let root = s.params.spectral_factor();
        assert_relative_eq!(d[3].du / root, 1.5 * (0.5 - 1.0), max_relative = 1e-12);
        let t = Totals::sum(&d);
        assert!(t.du.abs() < 1e-12);
        assert!(t.ds.abs() < 1e-12);
        assert!((t.dq + t.dw).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_cold_leg_mirrors_hot_leg() {
        let rows = table::process_rows(&spec(0.35, 2.0, 1.0, 2.0, 0.15));
        assert_eq!(rows[2].ds, -rows[0].ds);
        let d = otto_process_deltas(&spec(0.35, 2.0, 1.0, 2.0, 0.15), 1e-13).unwrap();
        assert_relative_eq!(d[2].ds, -d[0].ds, max_relative = 1e-11);
    }

    #[test]
    fn efficiency_examples() {
        let eta = otto_efficiency(&spec(0.5, 2.0, 1.0, 1.0, 0.3), 1e-13).unwrap();
        assert_relative_eq!(eta, 0.5, max_relative = 1e-12);
        for (g, p0, dphi) in [(0.2, 0.1, 0.3), (-0.7, 0.4, 2.5), (0.9, 0.05, 0.1)] {
            let eta = otto_efficiency(&spec(g, 5.0, 3.0, dphi, p0), 1e-13).unwrap();
            assert!((eta - 0.4).abs() < 1e-9, "{eta}");
        }
        let eta = otto_efficiency(&spec(0.5, 1.0, 0.999_999, 1.0, 0.3), 1e-13).unwrap();
        assert!(eta.abs() < 2e-6);
        assert_eq!(
            otto_efficiency(&spec(0.0, 2.0, 1.0, 1.0, 0.3), 1e-13),
            Err(Error::UndefinedEfficiency)
        );
    }

    #[test]
    fn report_orientations() {
        let s = spec(0.5, 2.0, 1.0, 1.0, 0.3);
        let engine = otto_report(&s, Orientation::Engine, 1e-13).unwrap();
        let fridge = otto_report(&s, Orientation::Refrigerator, 1e-13).unwrap();
        assert!(engine.work_output() > 0.0);
        assert_relative_eq!(
            fridge.work_output(),
            -engine.work_output(),
            max_relative = 1e-11
        );
        assert_relative_eq!(engine.efficiency.unwrap(), 0.5, max_relative = 1e-11);
        assert_relative_eq!(fridge.efficiency.unwrap(), 0.5, max_relative = 1e-11);
        assert_eq!(fridge.processes[0].leg.label(), "A->D");
    }

    #[test]
    fn sqrt_units_rescale_energies_only() {
        let s = spec(0.6, 2.0, 1.0, 1.0, 0.3);
        let r = otto_report(&s, Orientation::Engine, 1e-13).unwrap();
        let q = r.in_sqrt_units();
        assert_relative_eq!(q.corners[0].observables.eps_plus, 2.0, max_relative = 1e-15);
        assert_eq!(q.corners[1].observables.s, r.corners[1].observables.s);
        assert_eq!(q.processes[0].ds, r.processes[0].ds);
    }

    #[test]
    fn loop_report_on_rectangle_matches_process_sums() {
        let s = spec(0.4, 2.0, 1.0, 1.0, 0.3);
        let lr = generic_loop_report(
            &s.path(Orientation::Engine),
            &s.preparation(),
            &s.params,
            1e-13,
            1e-9,
        )
        .unwrap();
        let t = Totals::sum(&otto_process_deltas(&s, 1e-13).unwrap());
        assert!((lr.totals.dq - t.dq).abs() < 1e-8);
        assert!((lr.totals.dw - t.dw).abs() < 1e-8);
    }

    #[test]
    fn loop_report_rejects_open_paths() {
        let s = spec(0.4, 2.0, 1.0, 1.0, 0.3);
        let open = s.leg_path(Leg::new(Corner::A, Corner::B));
        assert!(matches!(
            generic_loop_report(&open, &s.preparation(), &s.params, 1e-12, 1e-9),
            Err(Error::InvalidPath(_))
        ));
    }

    #[test]
    fn ellipse_loops() {
        let center = ControlPoint::new(1.5, 0.4).unwrap();
        let path = ControlPath::ellipse(center, 0.5, 0.8).unwrap();
        let prep = Preparation::new(0.3, 0.0).unwrap();
        let p = SystemParams::new(0.4).unwrap();
        let r = generic_loop_report(&path, &prep, &p, 1e-12, 1e-9).unwrap();
        assert!(r.totals.dq.abs() > 1e-3);
        assert!((r.totals.dq + r.totals.dw).abs() < 1e-9);
        let h = generic_loop_report(&path, &prep, &SystemParams::new(0.0).unwrap(), 1e-12, 1e-9)
            .unwrap();
        assert!(h.totals.dq.abs() < 1e-14);
    }

    #[test]
    fn exact_drive_tracks_table_populations() {
        let s = spec(0.5, 1.0, 0.5, 1.0, 0.3);
        let drive = otto_drive(&s, 1e-4, 3.0).unwrap();
        let exact = exact_corner_populations(&s, &drive).unwrap();
        let rows = table::state_rows(&s);
        for (e, r) in exact.iter().zip(rows.iter()) {
            assert!(
                (e.0 - r.p_plus).abs() / r.p_plus < 1e-3,
                "{:?} {:?}",
                e,
                r.corner
            );
            assert!((e.1 - r.p_minus).abs() / r.p_minus < 1e-3);
        }
    }
}
