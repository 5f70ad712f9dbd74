//! Thermodynamics of the adiabatically evolved mixture.
//!
//! A preparation (p₀, φ₀) fixes the populations everywhere in the control
//! plane: P₊ = p₀ξ, P₋ = (1−p₀)/ξ with ξ = exp{γ(φ−φ₀)/√(1−γ²)}. Heat, work
//! and entropy along a path are line integrals of dQ = Σ ε_λ dP_λ,
//! dW = Σ P_λ dε_λ and dS.
//!
//! Two entropy differentials are available. The Clausius form dQ/T vanishes
//! around every closed loop. The Gibbs form −k_B Σ (1 + ln P_λ) dP_λ is the
//! exact differential of S = −k_B Σ P_λ ln P_λ. They differ by
//! −k_B(1 + ½ln[p₀(1−p₀)])·d(P₊ + P₋), which is nonzero on open legs because
//! total probability is not conserved.

use std::cell::RefCell;
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::evolve::xi_factor;
use crate::model::{ControlPoint, SystemParams};
use crate::quadrature::integrate;

/// Default absolute tolerance for path and surface quadratures.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Initial population p₀ of the upper level, prepared at φ₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preparation {
    pub p0: f64,
    pub phi0: f64,
}

impl Preparation {
    pub fn new(p0: f64, phi0: f64) -> Result<Self> {
        if !(p0 > 0.0 && p0 < 1.0) {
            return Err(Error::InvalidParameter {
                name: "p0",
                value: p0,
                reason: "initial population must lie in (0, 1)",
            });
        }
        if !phi0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "phi0",
                value: phi0,
                reason: "must be finite",
            });
        }
        Ok(Self { p0, phi0 })
    }

    pub fn xi(&self, params: &SystemParams, phi: f64) -> f64 {
        xi_factor(params, phi - self.phi0)
    }

    /// ln√(p₀⁻¹ − 1).
    pub fn half_log_odds(&self) -> f64 {
        0.5 * (1.0 / self.p0 - 1.0).ln()
    }

    pub fn populations(&self, params: &SystemParams, phi: f64) -> (f64, f64) {
        let xi = self.xi(params, phi);
        (self.p0 * xi, (1.0 - self.p0) / xi)
    }
}

/// Level populations at a control point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedState {
    pub point: ControlPoint,
    pub p_plus: f64,
    pub p_minus: f64,
    pub prep: Preparation,
}

impl MixedState {
    pub fn new(point: ControlPoint, p_plus: f64, p_minus: f64, prep: Preparation) -> Result<Self> {
        for (name, value) in [("p_plus", p_plus), ("p_minus", p_minus)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "population must be positive",
                });
            }
        }
        Ok(Self {
            point,
            p_plus,
            p_minus,
            prep,
        })
    }

    /// The state reached from `prep` by a quantum-adiabatic path ending at `point`.
    pub fn adiabatic(params: &SystemParams, prep: Preparation, point: ControlPoint) -> Self {
        let (p_plus, p_minus) = prep.populations(params, point.phi);
        Self {
            point,
            p_plus,
            p_minus,
            prep,
        }
    }

    /// P₊P₋, equal to p₀(1−p₀) on every adiabatic path.
    pub fn population_product(&self) -> f64 {
        self.p_plus * self.p_minus
    }

    pub fn total_probability(&self) -> f64 {
        self.p_plus + self.p_minus
    }
}

/// Spectral temperature: finite (possibly negative) or infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralTemperature {
    Finite(f64),
    Infinite,
}

impl SpectralTemperature {
    fn from_log_ratio(gap: f64, kb: f64, log_ratio: f64) -> Self {
        // equal populations up to rounding
        if log_ratio.abs() <= 8.0 * f64::EPSILON {
            SpectralTemperature::Infinite
        } else {
            SpectralTemperature::Finite(gap / (kb * log_ratio))
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpectralTemperature::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            SpectralTemperature::Finite(t) => Some(t),
            SpectralTemperature::Infinite => None,
        }
    }

    /// The value as an extended real (+∞ when infinite).
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            SpectralTemperature::Finite(t) => SpectralTemperature::Finite(t * factor),
            SpectralTemperature::Infinite => SpectralTemperature::Infinite,
        }
    }
}

/// T from ln(P₊/P₋) = −(ε₊ − ε₋)/(k_B T).
pub fn temperature(state: &MixedState, params: &SystemParams) -> SpectralTemperature {
    let gap = 2.0 * state.point.j * params.spectral_factor();
    SpectralTemperature::from_log_ratio(gap, params.kb(), (state.p_minus / state.p_plus).ln())
}

/// T = 2J√(1−γ²) / (k_B ln[(p₀⁻¹ − 1)ξ⁻²]).
pub fn spectral_temperature(
    params: &SystemParams,
    j: f64,
    p0: f64,
    xi: f64,
) -> SpectralTemperature {
    let gap = 2.0 * j * params.spectral_factor();
    let log = ((1.0 / p0 - 1.0) / (xi * xi)).ln();
    SpectralTemperature::from_log_ratio(gap, params.kb(), log)
}

/// 1/T, finite everywhere including the infinite-temperature line.
pub fn inverse_temperature(state: &MixedState, params: &SystemParams) -> f64 {
    let gap = 2.0 * state.point.j * params.spectral_factor();
    params.kb() * (state.p_minus / state.p_plus).ln() / gap
}

pub fn internal_energy(state: &MixedState, params: &SystemParams) -> f64 {
    let eps = state.point.j * params.spectral_factor();
    eps * state.p_plus - eps * state.p_minus
}

pub fn entropy(state: &MixedState, params: &SystemParams) -> f64 {
    -params.kb() * (state.p_plus * state.p_plus.ln() + state.p_minus * state.p_minus.ln())
}

/// Z = 2cosh(ln√(p₀⁻¹ − 1)).
pub fn partition_z(p0: f64) -> f64 {
    2.0 * (0.5 * (1.0 / p0 - 1.0).ln()).cosh()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermoObservables {
    pub t: SpectralTemperature,
    pub u: f64,
    pub s: f64,
    pub z: f64,
    pub eps_plus: f64,
    pub p_plus: f64,
    pub p_minus: f64,
}

pub fn observe(state: &MixedState, params: &SystemParams) -> ThermoObservables {
    ThermoObservables {
        t: temperature(state, params),
        u: internal_energy(state, params),
        s: entropy(state, params),
        z: partition_z(state.prep.p0),
        eps_plus: state.point.j * params.spectral_factor(),
        p_plus: state.p_plus,
        p_minus: state.p_minus,
    }
}

/// A smooth curve s ∈ [0, 1] ↦ (J, φ).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    Line {
        from: ControlPoint,
        to: ControlPoint,
    },
    /// (J, φ) = center + (r_J cos a, r_φ sin a), a = start_angle + sweep·s.
    EllipticArc {
        center: ControlPoint,
        radius_j: f64,
        radius_phi: f64,
        start_angle: f64,
        sweep: f64,
    },
}

impl Curve {
    pub fn point(&self, s: f64) -> (f64, f64) {
        match *self {
            Curve::Line { from, to } => (
                from.j + s * (to.j - from.j),
                from.phi + s * (to.phi - from.phi),
            ),
            Curve::EllipticArc {
                center,
                radius_j,
                radius_phi,
                start_angle,
                sweep,
            } => {
                let a = start_angle + sweep * s;
                (
                    center.j + radius_j * a.cos(),
                    center.phi + radius_phi * a.sin(),
                )
            }
        }
    }

    /// d(J, φ)/ds.
    pub fn velocity(&self, s: f64) -> (f64, f64) {
        match *self {
            Curve::Line { from, to } => (to.j - from.j, to.phi - from.phi),
            Curve::EllipticArc {
                radius_j,
                radius_phi,
                start_angle,
                sweep,
                ..
            } => {
                let a = start_angle + sweep * s;
                (-radius_j * sweep * a.sin(), radius_phi * sweep * a.cos())
            }
        }
    }

    fn min_j(&self) -> f64 {
        match *self {
            Curve::Line { from, to } => from.j.min(to.j),
            Curve::EllipticArc {
                center, radius_j, ..
            } => center.j - radius_j.abs(),
        }
    }

    fn max_j(&self) -> f64 {
        match *self {
            Curve::Line { from, to } => from.j.max(to.j),
            Curve::EllipticArc {
                center, radius_j, ..
            } => center.j + radius_j.abs(),
        }
    }
}

fn close(a: (f64, f64), b: (f64, f64)) -> bool {
    let scale = a.0.abs().max(a.1.abs()).max(1.0);
    (a.0 - b.0).abs() <= 1e-12 * scale && (a.1 - b.1).abs() <= 1e-12 * scale
}

/// Piecewise-smooth path in the (J, φ) plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    segments: Vec<Curve>,
    closed: bool,
}

impl ControlPath {
    pub fn new(segments: Vec<Curve>, closed: bool) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidPath("no segments".into()));
        }
        for (k, c) in segments.iter().enumerate() {
            if !(c.min_j() > 0.0) {
                return Err(Error::InvalidPath(format!("segment {k} reaches J <= 0")));
            }
            if k > 0 && !close(segments[k - 1].point(1.0), c.point(0.0)) {
                return Err(Error::InvalidPath(format!(
                    "segment {k} does not start where segment {} ends",
                    k - 1
                )));
            }
        }
        if closed
            && !close(
                segments[segments.len() - 1].point(1.0),
                segments[0].point(0.0),
            )
        {
            return Err(Error::InvalidPath("closed path endpoints differ".into()));
        }
        Ok(Self { segments, closed })
    }

    /// Straight edges through `vertices`; a closed polygon gets the edge back to the start.
    pub fn polygon(vertices: &[ControlPoint], closed: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidPath("need at least two vertices".into()));
        }
        let mut segments: Vec<Curve> = vertices
            .windows(2)
            .map(|w| Curve::Line {
                from: w[0],
                to: w[1],
            })
            .collect();
        if closed {
            segments.push(Curve::Line {
                from: vertices[vertices.len() - 1],
                to: vertices[0],
            });
        }
        Self::new(segments, closed)
    }

    /// Full ellipse traversed counterclockwise in the (J, φ) plane, starting at angle 0.
    pub fn ellipse(center: ControlPoint, radius_j: f64, radius_phi: f64) -> Result<Self> {
        Self::new(
            vec![Curve::EllipticArc {
                center,
                radius_j,
                radius_phi,
                start_angle: 0.0,
                sweep: TAU,
            }],
            true,
        )
    }

    pub fn segments(&self) -> &[Curve] {
        &self.segments
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn start(&self) -> (f64, f64) {
        self.segments[0].point(0.0)
    }

    pub fn end(&self) -> (f64, f64) {
        self.segments[self.segments.len() - 1].point(1.0)
    }

    /// max ε₊ along the path.
    pub fn energy_scale(&self, params: &SystemParams) -> f64 {
        let jmax = self.segments.iter().map(Curve::max_j).fold(0.0, f64::max);
        jmax * params.spectral_factor()
    }
}

/// Pointwise differential forms along a curve, per unit s.
#[derive(Debug, Clone, Copy)]
struct Differentials {
    heat: f64,
    work: f64,
    clausius: f64,
    gibbs: f64,
}

fn differentials(
    curve: &Curve,
    s: f64,
    prep: &Preparation,
    params: &SystemParams,
) -> Differentials {
    let (j, phi) = curve.point(s);
    let (dj, dphi) = curve.velocity(s);
    let root = params.spectral_factor();
    let (pp, pm) = prep.populations(params, phi);
    let dlog_xi = params.gamma() / root * dphi;
    let (dpp, dpm) = (pp * dlog_xi, -pm * dlog_xi);
    let (ep, em) = (j * root, -j * root);
    let (dep, dem) = (root * dj, -root * dj);
    let heat = ep * dpp + em * dpm;
    let work = pp * dep + pm * dem;
    // 1/T = k_B ln(P₋/P₊)/(ε₊ − ε₋) stays finite where T diverges
    let beta = params.kb() * (pm / pp).ln() / (ep - em);
    let gibbs = -params.kb() * ((1.0 + pp.ln()) * dpp + (1.0 + pm.ln()) * dpm);
    Differentials {
        heat,
        work,
        clausius: beta * heat,
        gibbs,
    }
}

fn path_integral(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
    pick: impl Fn(Differentials) -> f64,
) -> Result<f64> {
    let per_segment = tol / path.segments.len() as f64;
    path.segments.iter().try_fold(0.0, |acc, curve| {
        let r = integrate(
            |s| pick(differentials(curve, s, prep, params)),
            0.0,
            1.0,
            per_segment,
        )?;
        Ok(acc + r.value)
    })
}

/// ∫ Σ ε_λ dP_λ along `path`.
pub fn heat_line_integral(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<f64> {
    path_integral(path, prep, params, tol, |d| d.heat)
}

/// ∫ Σ P_λ dε_λ along `path`.
pub fn work_line_integral(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<f64> {
    path_integral(path, prep, params, tol, |d| d.work)
}

/// ∫ (1/T) Σ ε_λ dP_λ along `path`, using the regular 1/T form.
pub fn entropy_line_integral(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<f64> {
    path_integral(path, prep, params, tol, |d| d.clausius)
}

/// ∫ dS of S = −k_B Σ P_λ ln P_λ along `path`; equals S(end) − S(start).
pub fn gibbs_entropy_line_integral(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<f64> {
    path_integral(path, prep, params, tol, |d| d.gibbs)
}

/// Heat, work and entropy change along a path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathIntegrals {
    pub heat: f64,
    pub work: f64,
    /// ∫ dQ/T.
    pub clausius_entropy: f64,
    /// ∫ dS, the change of the Gibbs entropy.
    pub entropy: f64,
}

impl PathIntegrals {
    pub fn internal_energy(&self) -> f64 {
        self.heat + self.work
    }
}

pub fn path_integrals(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<PathIntegrals> {
    Ok(PathIntegrals {
        heat: heat_line_integral(path, prep, params, tol)?,
        work: work_line_integral(path, prep, params, tol)?,
        clausius_entropy: entropy_line_integral(path, prep, params, tol)?,
        entropy: gibbs_entropy_line_integral(path, prep, params, tol)?,
    })
}

/// One sample of a path trace with cumulative heat and work.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSample {
    pub s: f64,
    pub state: MixedState,
    pub observables: ThermoObservables,
    pub heat: f64,
    pub work: f64,
}

/// Samples `per_segment` + 1 points on each segment (s runs over [0, n_segments]).
pub fn trace_path(
    path: &ControlPath,
    prep: &Preparation,
    params: &SystemParams,
    per_segment: usize,
    tol: f64,
) -> Result<Vec<PathSample>> {
    let per_segment = per_segment.max(1);
    let step_tol = tol / (path.segments.len() * per_segment) as f64;
    let mut out = Vec::with_capacity(path.segments.len() * per_segment + 1);
    let (mut heat, mut work) = (0.0, 0.0);
    for (k, curve) in path.segments.iter().enumerate() {
        let first = if k == 0 { 0 } else { 1 };
        for i in first..=per_segment {
            let s = i as f64 / per_segment as f64;
            if i > 0 {
                let s0 = (i - 1) as f64 / per_segment as f64;
                heat += integrate(
                    |x| differentials(curve, x, prep, params).heat,
                    s0,
                    s,
                    step_tol,
                )?
                .value;
                work += integrate(
                    |x| differentials(curve, x, prep, params).work,
                    s0,
                    s,
                    step_tol,
                )?
                .value;
            }
            let (j, phi) = curve.point(s);
            let state = MixedState::adiabatic(params, *prep, ControlPoint { j, phi });
            out.push(PathSample {
                s: k as f64 + s,
                state,
                observables: observe(&state, params),
                heat,
                work,
            });
        }
    }
    Ok(out)
}

/// Region of the (J, φ) plane for the surface form of ΔQ.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rectangle {
        j_lo: f64,
        j_hi: f64,
        phi_lo: f64,
        phi_hi: f64,
    },
    /// Simple polygon; the result carries the sign of its orientation
    /// (counterclockwise with J as abscissa is positive).
    Polygon(Vec<ControlPoint>),
}

/// (2γ/Z)·cosh(ln√(p₀⁻¹−1) − ln ξ(φ)).
fn heat_density(prep: &Preparation, params: &SystemParams, phi: f64) -> f64 {
    let u = prep.half_log_odds() - prep.xi(params, phi).ln();
    2.0 * params.gamma() / partition_z(prep.p0) * u.cosh()
}

/// Total length of the polygon's cross-section at height φ.
fn polygon_width(vertices: &[ControlPoint], phi: f64) -> f64 {
    let n = vertices.len();
    let mut crossings: Vec<f64> = Vec::new();
    for k in 0..n {
        let (a, b) = (vertices[k], vertices[(k + 1) % n]);
        let (lo, hi) = if a.phi <= b.phi { (a, b) } else { (b, a) };
        // half-open so shared vertices count once
        if phi >= lo.phi && phi < hi.phi {
            let t = (phi - lo.phi) / (hi.phi - lo.phi);
            crossings.push(lo.j + t * (hi.j - lo.j));
        }
    }
    crossings.sort_by(f64::total_cmp);
    crossings.chunks_exact(2).map(|p| p[1] - p[0]).sum()
}

fn signed_area(vertices: &[ControlPoint]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|k| {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            a.j * b.phi - b.j * a.phi
        })
        .sum::<f64>()
        * 0.5
}

/// ΔQ as the area integral (2γ/Z)∬ cosh(ln√(p₀⁻¹−1) − ln ξ) dJ dφ.
pub fn heat_surface_integral(
    region: &Region,
    prep: &Preparation,
    params: &SystemParams,
    tol: f64,
) -> Result<f64> {
    match region {
        Region::Rectangle {
            j_lo,
            j_hi,
            phi_lo,
            phi_hi,
        } => {
            // tensor product: inner J quadrature nested in the outer φ one
            let inner_tol = tol / (1.0 + (phi_hi - phi_lo).abs());
            let failure = RefCell::new(None);
            let outer = integrate(
                |phi| match integrate(
                    |_j| heat_density(prep, params, phi),
                    *j_lo,
                    *j_hi,
                    inner_tol,
                ) {
                    Ok(r) => r.value,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        f64::NAN
                    }
                },
                *phi_lo,
                *phi_hi,
                0.5 * tol,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            Ok(outer?.value)
        }
        Region::Polygon(vertices) => {
            if vertices.len() < 3 {
                return Ok(0.0);
            }
            let area = signed_area(vertices);
            if area == 0.0 {
                return Ok(0.0);
            }
            let mut cuts: Vec<f64> = vertices.iter().map(|v| v.phi).collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let slab_tol = tol / cuts.len().max(1) as f64;
            let mut total = 0.0;
            for w in cuts.windows(2) {
                let r = integrate(
                    |phi| polygon_width(vertices, phi) * heat_density(prep, params, phi),
                    w[0],
                    w[1],
                    slab_tol,
                )?;
                total += r.value;
            }
            Ok(total * area.signum())
        }
    }
}

/// Closed form of the rectangle surface integral from the sinh primitive:
/// (2√(1−γ²)/Z)(J_hi − J_lo)[sinh u(φ_lo) − sinh u(φ_hi)].
pub fn heat_rectangle_closed_form(
    j_lo: f64,
    j_hi: f64,
    phi_lo: f64,
    phi_hi: f64,
    prep: &Preparation,
    params: &SystemParams,
) -> f64 {
    let u = |phi: f64| prep.half_log_odds() - prep.xi(params, phi).ln();
    2.0 * params.spectral_factor() / partition_z(prep.p0)
        * (j_hi - j_lo)
        * (u(phi_lo).sinh() - u(phi_hi).sinh())
}
