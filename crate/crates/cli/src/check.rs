//! Invariant suite behind `nhqhe check`.
//!
//! Each check draws its own seeded sample, so results do not depend on the
//! order in which the worker pool schedules them.

use std::f64::consts::PI;
use std::fmt;

use nhqhe_core::classical::{classical_cycle, ClassicalSpec, GasState};
use nhqhe_core::cycle::{
    exact_corner_populations, otto_corner_states, otto_drive, otto_efficiency, otto_report, table,
    Orientation, OttoSpec,
};
use nhqhe_core::evolve::{segment_propagator, stepwise_propagator, DriveSegment};
use nhqhe_core::model::{build_hamiltonian, eigensystem, pt_defect};
use nhqhe_core::thermo::{
    heat_line_integral, heat_surface_integral, path_integrals, ControlPath, Preparation, Region,
};
use nhqhe_core::{Branch, ControlPoint, SystemParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

type Check = fn(&mut ChaCha8Rng) -> (bool, String);

const CHECKS: [(&str, Check); 11] = [
    ("eigensystem", eigensystem_check),
    ("Otto efficiency", efficiency_check),
    ("Table I/II cells", table_check),
    ("closed-loop state functions", loop_check),
    ("Hermitian triviality", hermitian_check),
    ("Green's theorem", green_check),
    (
        "biorthonormal unitarity relative to ||U|| ||U~||",
        unitarity_check,
    ),
    ("adiabatic convergence", convergence_check),
    ("stepwise oracle order", richardson_check),
    ("classical analogue", classical_check),
    ("Carnot bound", carnot_check),
];

/// Runs every check in parallel and returns outcomes in a fixed order.
pub fn run_suite(seed: u64) -> Vec<CheckOutcome> {
    CHECKS
        .par_iter()
        .enumerate()
        .map(|(k, (name, check))| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1_000_003).wrapping_add(k as u64));
            let (pass, detail) = check(&mut rng);
            CheckOutcome { name, pass, detail }
        })
        .collect()
}

fn gamma(r: &mut ChaCha8Rng) -> f64 {
    let g: f64 = r.gen_range(0.01..=0.9);
    if r.gen_bool(0.5) {
        g
    } else {
        -g
    }
}

fn params(g: f64) -> SystemParams {
    SystemParams::new(g).expect("|γ| < 1")
}

fn pt(j: f64, phi: f64) -> ControlPoint {
    ControlPoint::new(j, phi).expect("J > 0")
}

fn otto(r: &mut ChaCha8Rng) -> OttoSpec {
    let j1 = r.gen_range(0.5..5.0);
    let phi1 = r.gen_range(-PI..PI);
    let dphi = r.gen_range(0.1..=3.0) * if r.gen_bool(0.5) { 1.0 } else { -1.0 };
    let p = params(gamma(r));
    OttoSpec::new(
        p,
        j1,
        j1 * r.gen_range(0.05..0.95),
        phi1,
        phi1 + dphi,
        r.gen_range(0.05..0.45),
    )
    .unwrap()
}

fn ellipse(r: &mut ChaCha8Rng) -> ControlPath {
    let c = pt(r.gen_range(1.0..3.0), r.gen_range(-1.0..1.0));
    ControlPath::ellipse(c, c.j * r.gen_range(0.1..0.8), r.gen_range(0.1..1.5)).unwrap()
}

fn eigensystem_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let p = params(r.gen_range(-0.99..0.99));
        let x = pt(r.gen_range(0.01..10.0), r.gen_range(-PI..PI));
        let e = eigensystem(&p, &x);
        let h = build_hamiltonian(&p, &x);
        let mut residual: f64 = 0.0;
        for b in Branch::BOTH {
            let psi = e.psi(b);
            let hpsi = h.apply(&psi);
            let d =
                (hpsi[0] - psi[0] * e.energy(b)).norm() + (hpsi[1] - psi[1] * e.energy(b)).norm();
            residual = residual.max(d / x.j);
        }
        worst = worst
            .max(e.biorthonormality_defect())
            .max(e.completeness_defect())
            .max(residual)
            .max(pt_defect(&h) / x.j);
    }
    (worst < 1e-10, format!("200 points, max defect {worst:.2e}"))
}

fn efficiency_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let s = otto(r);
        match otto_efficiency(&s, TOL * s.j1) {
            Ok(eta) => worst = worst.max((eta - (1.0 - s.j2 / s.j1)).abs()),
            Err(e) => return (false, e.to_string()),
        }
    }
    (
        worst < 1e-8,
        format!("50 specs, max |η − (1 − J2/J1)| {worst:.2e}"),
    )
}

fn table_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = otto(r);
        let rep = match otto_report(&s, Orientation::Engine, TOL * s.j1) {
            Ok(rep) => rep.in_sqrt_units(),
            Err(e) => return (false, e.to_string()),
        };
        let rel = |a: f64, b: f64| {
            let d = (a - b).abs();
            if d <= 1e-13 * s.j1 {
                0.0
            } else {
                d / a.abs().max(b.abs())
            }
        };
        for (c, row) in rep.corners.iter().zip(table::state_rows(&s)) {
            let o = c.observables;
            worst = worst
                .max(rel(o.t.value(), row.t.value()))
                .max(rel(o.eps_plus, row.eps_plus))
                .max(rel(o.p_plus, row.p_plus))
                .max(rel(o.p_minus, row.p_minus))
                .max(rel(o.u, row.u))
                .max(rel(o.s, row.s));
        }
        for (p, row) in rep.processes.iter().zip(table::process_rows(&s)) {
            if let (Some(a), Some(b)) = (p.dt, row.dt) {
                worst = worst.max(rel(a, b));
            }
            worst = worst
                .max(rel(p.du, row.du))
                .max(rel(p.dq, row.dq))
                .max(rel(p.dw, row.dw))
                .max(rel(p.ds, row.ds));
        }
    }
    (
        worst < 1e-8,
        format!("20 specs, max relative mismatch {worst:.2e}"),
    )
}

fn loop_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let path = ellipse(r);
        let p = params(gamma(r));
        let prep = Preparation::new(r.gen_range(0.05..0.95), r.gen_range(-1.0..1.0)).unwrap();
        match path_integrals(&path, &prep, &p, TOL) {
            Ok(i) => {
                let scale = path.energy_scale(&p);
                worst = worst
                    .max(i.internal_energy().abs() / scale)
                    .max(i.entropy.abs() / scale)
                    .max(i.clausius_entropy.abs() / scale);
            }
            Err(e) => return (false, e.to_string()),
        }
    }
    (
        worst <= 1e-9,
        format!("20 ellipses, max |ΔU|, |ΔS| per energy scale {worst:.2e}"),
    )
}

fn hermitian_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let p = params(0.0);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let path = ellipse(r);
        let prep = Preparation::new(r.gen_range(0.05..0.95), 0.0).unwrap();
        match path_integrals(&path, &prep, &p, TOL) {
            Ok(i) => worst = worst.max(i.heat.abs()).max(i.work.abs()),
            Err(e) => return (false, e.to_string()),
        }
    }
    (
        worst <= 1e-12,
        format!("20 loops at γ = 0, max |ΔQ|, |ΔW| {worst:.2e}"),
    )
}

fn green_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = params(gamma(r));
        let prep = Preparation::new(r.gen_range(0.05..0.45), 0.0).unwrap();
        let (j_lo, phi_lo) = (r.gen_range(0.2..2.0), r.gen_range(-1.5..1.0));
        let (j_hi, phi_hi) = (j_lo + r.gen_range(0.1..3.0), phi_lo + r.gen_range(0.1..3.0));
        let boundary = ControlPath::polygon(
            &[
                pt(j_lo, phi_lo),
                pt(j_hi, phi_lo),
                pt(j_hi, phi_hi),
                pt(j_lo, phi_hi),
            ],
            true,
        )
        .unwrap();
        let region = Region::Rectangle {
            j_lo,
            j_hi,
            phi_lo,
            phi_hi,
        };
        match (
            heat_line_integral(&boundary, &prep, &p, TOL),
            heat_surface_integral(&region, &prep, &p, 1e-12),
        ) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
        }
    }
    (
        worst <= 1e-8,
        format!("20 rectangles, max |line − surface| {worst:.2e}"),
    )
}

fn unitarity_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst_abs_bounded: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    for _ in 0..500 {
        let seg = DriveSegment::new(
            r.gen_range(-5.0..=5.0),
            r.gen_range(0.0..=50.0),
            r.gen_range(-PI..PI),
        )
        .unwrap();
        let pair = segment_propagator(&params(r.gen_range(-0.9..=0.9)), &seg);
        let growth = pair.u.frobenius_norm() * pair.u_tilde.frobenius_norm();
        let defect = pair.biorthonormal_defect();
        worst_rel = worst_rel.max(defect / growth.max(1.0));
        if growth < 1e4 {
            worst_abs_bounded = worst_abs_bounded.max(defect);
        }
    }
    (
        worst_rel < 1e-12 && worst_abs_bounded < 1e-10,
        format!(
            "500 samples, max ‖Ũ†U − I‖/max(1, ‖U‖‖Ũ‖) {worst_rel:.2e}, max ‖Ũ†U − I‖ where ‖U‖‖Ũ‖ < 1e4: {worst_abs_bounded:.2e}"
        ),
    )
}

fn convergence_check(_: &mut ChaCha8Rng) -> (bool, String) {
    let mut ratios = Vec::new();
    for (g, dphi, p0) in [(0.5, 1.0, 0.3), (-0.4, 1.0, 0.3)] {
        let s = OttoSpec::new(params(g), 1.0, 0.5, 0.0, dphi, p0).unwrap();
        let rows = table::state_rows(&s);
        let err = |m: f64| -> Option<f64> {
            let pops = exact_corner_populations(&s, &otto_drive(&s, m, 3.0).ok()?).ok()?;
            Some(
                pops.iter()
                    .zip(rows.iter())
                    .map(|(e, row)| {
                        ((e.0 - row.p_plus).abs() / row.p_plus)
                            .max((e.1 - row.p_minus).abs() / row.p_minus)
                    })
                    .fold(0.0, f64::max),
            )
        };
        match (err(1e-2), err(5e-3), err(2.5e-3)) {
            (Some(a), Some(b), Some(c)) => ratios.extend([a / b, b / c]),
            _ => return (false, "drive construction failed".into()),
        }
    }
    (
        ratios.iter().all(|x| (1.5..=2.5).contains(x)),
        format!("error ratios under margin halving {ratios:.3?}"),
    )
}

fn richardson_check(_: &mut ChaCha8Rng) -> (bool, String) {
    let p = params(0.5);
    let seg = DriveSegment::new(0.1, 5.0, 0.0).unwrap();
    let exact = segment_propagator(&p, &seg).u;
    let path = seg.at_constant_coupling(1.0);
    let err = |dt: f64| (stepwise_propagator(&path, dt, &p) - exact).frobenius_norm();
    let e = [err(0.02), err(0.01), err(0.005)];
    let ratios = [e[0] / e[1], e[1] / e[2]];
    (
        ratios.iter().all(|x| (3.5..=4.5).contains(x)),
        format!("Richardson ratios {ratios:.3?}"),
    )
}

fn classical_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let t1 = r.gen_range(100.0..1000.0);
        let t2 = t1 * r.gen_range(0.05..0.95);
        let gas = GasState::monatomic(r.gen_range(0.1..10.0), t1, r.gen_range(0.1..10.0), 5.0, 1.0)
            .unwrap();
        for x in [0.05, 0.5] {
            match ClassicalSpec::new(t2, x, gas).and_then(|s| classical_cycle(&s)) {
                Ok(rep) => {
                    worst = worst
                        .max(rep.closure_error)
                        .max((rep.efficiency - (1.0 - t2 / t1)).abs())
                        .max((rep.w_net - (rep.q_in - rep.q_out)).abs() / rep.q_in);
                }
                Err(e) => return (false, e.to_string()),
            }
        }
    }
    (
        worst <= 1e-10,
        format!("100 cycles, max closure or efficiency error {worst:.2e}"),
    )
}

fn carnot_check(r: &mut ChaCha8Rng) -> (bool, String) {
    let mut min_gap = f64::INFINITY;
    for _ in 0..50 {
        let p0 = r.gen_range(0.05..0.45);
        let ln_xi = (1.0f64 / p0 - 1.0).ln() * 0.5 * r.gen_range(0.02..0.98);
        let g = gamma(r);
        let p = params(g);
        let j1 = r.gen_range(0.5..5.0);
        let dphi = ln_xi * p.spectral_factor() / g;
        let s = OttoSpec::new(p, j1, j1 * r.gen_range(0.05..0.95), 0.0, dphi, p0).unwrap();
        let temps: Vec<f64> = otto_corner_states(&s)
            .iter()
            .map(|c| c.observables.t.value())
            .collect();
        let tmin = temps.iter().copied().fold(f64::INFINITY, f64::min);
        let tmax = temps.iter().copied().fold(0.0, f64::max);
        match otto_efficiency(&s, TOL * j1) {
            Ok(eta) => min_gap = min_gap.min(1.0 - tmin / tmax - eta),
            Err(e) => return (false, e.to_string()),
        }
    }
    (
        min_gap >= -1e-12,
        format!("50 restricted specs, min (η_Carnot − η) {min_gap:.3e}"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_deterministic_and_passes() {
        let a = run_suite(7);
        let b = run_suite(7);
        assert_eq!(a, b);
        for o in &a {
            assert!(o.pass, "{o}");
        }
    }
}
