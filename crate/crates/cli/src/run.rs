//! Mode runners: each turns a validated job into CSV files and, for the
//! Otto cycle, a text report.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nhqhe_core::classical::{classical_cycle, ClassicalSpec};
use nhqhe_core::cycle::{
    exact_corner_populations, generic_loop_report, otto_drive, otto_report, Corner, CycleReport,
    Orientation, OttoSpec,
};
use nhqhe_core::evolve::{segment_propagator, DriveSegment, PropagatorPair};
use nhqhe_core::model::{build_hamiltonian, eigensystem, pt_defect};
use nhqhe_core::thermo::{trace_path, ControlPath, Preparation};
use nhqhe_core::{ControlPoint, SystemParams};

use crate::check;
use crate::config::{Job, RunConfig};
use crate::error::{CliError, Result};
use crate::format::{number, optional};

/// Loop integrals must return ΔU and ΔS to zero within this fraction of
/// the loop's energy scale.
const LOOP_CHECK_TOL: f64 = 1e-8;

/// Files written by a run, in order.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

fn write_err(path: &Path, e: impl Into<std::io::Error>) -> CliError {
    CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

fn write_csv(dir: &Path, name: &str, table: &Table, out: &mut RunOutput) -> Result<()> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| write_err(&path, e))?;
    w.write_record(&table.header)
        .map_err(|e| write_err(&path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| write_err(&path, e))?;
    }
    w.flush().map_err(|e| write_err(&path, e))?;
    out.files.push(path);
    Ok(())
}

fn write_text(dir: &Path, name: &str, text: &str, out: &mut RunOutput) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| write_err(&path, e))?;
    out.files.push(path);
    Ok(())
}

/// Runs the configured job, writing its artifacts into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let mut out = RunOutput::default();
    if let Job::Check { seed } = config.job {
        let outcomes = check::run_suite(seed);
        for o in &outcomes {
            println!("{o}");
        }
        let failed = outcomes.iter().filter(|o| !o.pass).count();
        return if failed == 0 {
            Ok(out)
        } else {
            Err(CliError::ChecksFailed { failed })
        };
    }
    fs::create_dir_all(&config.out).map_err(|e| write_err(&config.out, e))?;
    let ctx = Ctx {
        digits: config.precision,
        sqrt_units: config.sqrt_units,
    };
    match &config.job {
        Job::Eigs { params, points } => {
            write_csv(
                &config.out,
                "eigs.csv",
                &eigs_table(params, points, &ctx),
                &mut out,
            )?;
        }
        Job::Evolve {
            params,
            segments,
            samples,
        } => {
            write_csv(
                &config.out,
                "evolve.csv",
                &evolve_table(params, segments, *samples, &ctx)?,
                &mut out,
            )?;
        }
        Job::Otto {
            spec,
            orientation,
            margin,
            shift_tau,
        } => {
            let report = otto_report(spec, *orientation, config.tolerance)
                .map_err(|e| CliError::numerical("otto cycle integrals", e))?;
            let shown = if ctx.sqrt_units {
                report.in_sqrt_units()
            } else {
                report.clone()
            };
            write_csv(
                &config.out,
                "corners.csv",
                &corners_table(&shown, &ctx),
                &mut out,
            )?;
            write_csv(
                &config.out,
                "processes.csv",
                &processes_table(&shown, &ctx),
                &mut out,
            )?;
            let exact = match margin {
                Some(m) => Some(exact_section(spec, *m, *shift_tau, &ctx)?),
                None => None,
            };
            write_text(
                &config.out,
                "report.txt",
                &otto_text(&shown, exact.as_deref(), &ctx),
                &mut out,
            )?;
        }
        Job::Loop {
            params,
            prep,
            path,
            samples,
        } => {
            let (trace, summary) =
                loop_tables(params, prep, path, *samples, config.tolerance, &ctx)?;
            write_csv(&config.out, "loop.csv", &trace, &mut out)?;
            write_csv(&config.out, "loop_summary.csv", &summary, &mut out)?;
        }
        Job::Classical(spec) => {
            let (states, summary) = classical_tables(spec, &ctx)?;
            write_csv(&config.out, "classical.csv", &states, &mut out)?;
            write_csv(&config.out, "classical_summary.csv", &summary, &mut out)?;
        }
        Job::Check { .. } => unreachable!("handled above"),
    }
    Ok(out)
}

struct Ctx {
    digits: usize,
    sqrt_units: bool,
}

impl Ctx {
    fn n(&self, x: f64) -> String {
        number(x, self.digits)
    }

    fn units(&self) -> String {
        self.sqrt_units.to_string()
    }

    /// Energy-like quantity, divided by √(1−γ²) in sqrt units.
    fn energy(&self, x: f64, params: &SystemParams) -> String {
        if self.sqrt_units {
            self.n(x / params.spectral_factor())
        } else {
            self.n(x)
        }
    }
}

fn eigs_table(params: &SystemParams, points: &[ControlPoint], ctx: &Ctx) -> Table {
    let mut t = Table::new(&[
        "J",
        "phi",
        "eps_plus",
        "eps_minus",
        "dirac_norm_theta",
        "pt_defect",
        "biorthonormality_defect",
        "completeness_defect",
        "sqrt_units",
    ]);
    for p in points {
        let e = eigensystem(params, p);
        t.push(vec![
            ctx.n(p.j),
            ctx.n(p.phi),
            ctx.energy(e.eps_plus, params),
            ctx.energy(e.eps_minus, params),
            ctx.n(e.dirac_norm_theta),
            ctx.n(pt_defect(&build_hamiltonian(params, p))),
            ctx.n(e.biorthonormality_defect()),
            ctx.n(e.completeness_defect()),
            ctx.units(),
        ]);
    }
    t
}

fn evolve_table(
    params: &SystemParams,
    segments: &[DriveSegment],
    samples: usize,
    ctx: &Ctx,
) -> Result<Table> {
    let mut t = Table::new(&[
        "tau", "U11re", "U11im", "U12re", "U12im", "U21re", "U21im", "U22re", "U22im", "defect",
    ]);
    let mut before = PropagatorPair::identity();
    let mut elapsed = 0.0;
    for (k, seg) in segments.iter().enumerate() {
        for i in usize::from(k > 0)..=samples {
            let tau = seg.tau * i as f64 / samples as f64;
            let partial = DriveSegment::new(seg.omega, tau, seg.phi_start)
                .map_err(|e| CliError::numerical("evolve segments", e))?;
            let step = segment_propagator(params, &partial);
            let pair = PropagatorPair {
                u: step.u * before.u,
                u_tilde: step.u_tilde * before.u_tilde,
            };
            let m = pair.u.entries();
            let mut row = vec![ctx.n(elapsed + tau)];
            for z in m {
                row.push(ctx.n(z.re));
                row.push(ctx.n(z.im));
            }
            row.push(ctx.n(pair.biorthonormal_defect()));
            t.push(row);
        }
        let step = segment_propagator(params, seg);
        before = PropagatorPair {
            u: step.u * before.u,
            u_tilde: step.u_tilde * before.u_tilde,
        };
        elapsed += seg.tau;
    }
    Ok(t)
}

fn corners_table(report: &CycleReport, ctx: &Ctx) -> Table {
    let mut t = Table::new(&[
        "point",
        "J",
        "phi",
        "T",
        "eps_plus",
        "P_plus",
        "P_minus",
        "U",
        "S",
        "sqrt_units",
    ]);
    for c in &report.corners {
        let o = c.observables;
        t.push(vec![
            c.corner.label().to_string(),
            ctx.n(c.point.j),
            ctx.n(c.point.phi),
            optional(o.t.finite(), ctx.digits),
            ctx.n(o.eps_plus),
            ctx.n(o.p_plus),
            ctx.n(o.p_minus),
            ctx.n(o.u),
            ctx.n(o.s),
            ctx.units(),
        ]);
    }
    t
}

fn processes_table(report: &CycleReport, ctx: &Ctx) -> Table {
    let mut t = Table::new(&["leg", "dT", "dU", "dQ", "dW", "dS", "sqrt_units"]);
    for p in &report.processes {
        t.push(vec![
            p.leg.label(),
            p.dt.map_or_else(|| "nan".into(), |v| ctx.n(v)),
            ctx.n(p.du),
            ctx.n(p.dq),
            ctx.n(p.dw),
            ctx.n(p.ds),
            ctx.units(),
        ]);
    }
    t
}

fn exact_section(spec: &OttoSpec, margin: f64, shift_tau: f64, ctx: &Ctx) -> Result<String> {
    let drive =
        otto_drive(spec, margin, shift_tau).map_err(|e| CliError::numerical("otto drive", e))?;
    let pops = exact_corner_populations(spec, &drive)
        .map_err(|e| CliError::numerical("exact evolution", e))?;
    let prep = spec.preparation();
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Exact evolution (margin {}, sweep rate {}, level-shift tau {})",
        ctx.n(margin),
        ctx.n(drive.omega),
        ctx.n(shift_tau)
    );
    let _ = writeln!(
        s,
        "{:<6}{:>22}{:>22}{:>22}{:>22}",
        "point", "P_plus", "P_minus", "adiabatic P_plus", "adiabatic P_minus"
    );
    for (corner, (pp, pm)) in Corner::ALL.iter().zip(pops) {
        let (ap, am) = prep.populations(&spec.params, spec.point(*corner).phi);
        let _ = writeln!(
            s,
            "{:<6}{:>22}{:>22}{:>22}{:>22}",
            corner.label(),
            ctx.n(pp),
            ctx.n(pm),
            ctx.n(ap),
            ctx.n(am)
        );
    }
    Ok(s)
}

fn otto_text(report: &CycleReport, exact: Option<&str>, ctx: &Ctx) -> String {
    let spec = &report.spec;
    let mut s = String::new();
    let _ = writeln!(s, "Variable-mass Otto cycle");
    let _ = writeln!(
        s,
        "gamma = {}, kB = {}, J1 = {}, J2 = {}, phi1 = {}, phi2 = {}, p0 = {}, xi = {}",
        ctx.n(spec.params.gamma()),
        ctx.n(spec.params.kb()),
        ctx.n(spec.j1),
        ctx.n(spec.j2),
        ctx.n(spec.phi1),
        ctx.n(spec.phi2),
        ctx.n(spec.p0),
        ctx.n(spec.xi())
    );
    let orientation = match report.orientation {
        Orientation::Engine => "engine (A->B->C->D->A)",
        Orientation::Refrigerator => "refrigerator (A->D->C->B->A)",
    };
    let _ = writeln!(s, "orientation: {orientation}");
    if ctx.sqrt_units {
        let _ = writeln!(
            s,
            "T, eps_plus, U and all energy changes are in units of sqrt(1-gamma^2)"
        );
    }
    let _ = writeln!(s, "\nState parameters");
    let _ = writeln!(
        s,
        "{:<6}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}",
        "point", "J", "phi", "T", "eps_plus", "P_plus", "P_minus", "U", "S"
    );
    for c in &report.corners {
        let o = c.observables;
        let _ = writeln!(
            s,
            "{:<6}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}{:>20}",
            c.corner.label(),
            ctx.n(c.point.j),
            ctx.n(c.point.phi),
            optional(o.t.finite(), ctx.digits),
            ctx.n(o.eps_plus),
            ctx.n(o.p_plus),
            ctx.n(o.p_minus),
            ctx.n(o.u),
            ctx.n(o.s)
        );
    }
    let _ = writeln!(s, "\nProcess changes");
    let _ = writeln!(
        s,
        "{:<6}{:<24}{:>20}{:>20}{:>20}{:>20}{:>20}",
        "leg", "kind", "dT", "dU", "dQ", "dW", "dS"
    );
    for p in &report.processes {
        let _ = writeln!(
            s,
            "{:<6}{:<24}{:>20}{:>20}{:>20}{:>20}{:>20}",
            p.leg.label(),
            p.leg.kind().label(),
            p.dt.map_or_else(|| "nan".into(), |v| ctx.n(v)),
            ctx.n(p.du),
            ctx.n(p.dq),
            ctx.n(p.dw),
            ctx.n(p.ds)
        );
    }
    let t = report.totals;
    let _ = writeln!(
        s,
        "{:<30}{:>20}{:>20}{:>20}{:>20}{:>20}",
        "total",
        "",
        ctx.n(t.du),
        ctx.n(t.dq),
        ctx.n(t.dw),
        ctx.n(t.ds)
    );
    let _ = writeln!(s, "\nwork output: {}", ctx.n(report.work_output()));
    match report.efficiency {
        Some(eta) => {
            let _ = writeln!(
                s,
                "efficiency: {} (1 - J2/J1 = {})",
                ctx.n(eta),
                ctx.n(1.0 - spec.j2 / spec.j1)
            );
        }
        None => {
            let _ = writeln!(s, "efficiency: undefined (no heat absorbed, xi = 1)");
        }
    }
    if let Some(e) = exact {
        let _ = writeln!(s, "\n{e}");
    }
    s
}

fn loop_tables(
    params: &SystemParams,
    prep: &Preparation,
    path: &ControlPath,
    samples: usize,
    tol: f64,
    ctx: &Ctx,
) -> Result<(Table, Table)> {
    let trace = trace_path(path, prep, params, samples, tol)
        .map_err(|e| CliError::numerical("loop trace", e))?;
    let mut t = Table::new(&[
        "s",
        "J",
        "phi",
        "P_plus",
        "P_minus",
        "T",
        "U",
        "S",
        "Q",
        "W",
        "sqrt_units",
    ]);
    for p in &trace {
        let o = p.observables;
        let temp = o.t.finite().map(|v| {
            if ctx.sqrt_units {
                v / params.spectral_factor()
            } else {
                v
            }
        });
        t.push(vec![
            ctx.n(p.s),
            ctx.n(p.state.point.j),
            ctx.n(p.state.point.phi),
            ctx.n(o.p_plus),
            ctx.n(o.p_minus),
            optional(temp, ctx.digits),
            ctx.energy(o.u, params),
            ctx.n(o.s),
            ctx.energy(p.heat, params),
            ctx.energy(p.work, params),
            ctx.units(),
        ]);
    }
    let report = generic_loop_report(path, prep, params, tol, LOOP_CHECK_TOL)
        .map_err(|e| CliError::numerical("loop integrals", e))?;
    let mut summary = Table::new(&[
        "net_Q",
        "net_W",
        "net_U",
        "net_S",
        "clausius_S",
        "work_output",
        "sqrt_units",
    ]);
    let r = report.totals;
    summary.push(vec![
        ctx.energy(r.dq, params),
        ctx.energy(r.dw, params),
        ctx.energy(r.du, params),
        ctx.n(r.ds),
        ctx.n(report.clausius_entropy),
        ctx.energy(report.work_output(), params),
        ctx.units(),
    ]);
    Ok((t, summary))
}

fn classical_tables(spec: &ClassicalSpec, ctx: &Ctx) -> Result<(Table, Table)> {
    let r = classical_cycle(spec).map_err(|e| CliError::numerical("classical cycle", e))?;
    let mut states = Table::new(&["step", "N", "T", "V", "S", "U"]);
    for (name, g) in [
        "start",
        "isothermal_add",
        "adiabatic_expand",
        "isothermal_remove",
        "adiabatic_compress",
    ]
    .iter()
    .zip(r.states.iter())
    {
        states.push(vec![
            name.to_string(),
            ctx.n(g.n),
            ctx.n(g.t),
            ctx.n(g.v),
            ctx.n(g.s),
            ctx.n(g.internal_energy()),
        ]);
    }
    let mut summary = Table::new(&[
        "Q_in",
        "Q_out",
        "dS_in",
        "dS_out",
        "W_expand",
        "W_compress",
        "W_net",
        "W_mechanical",
        "efficiency",
        "carnot",
        "closure_error",
    ]);
    summary.push(vec![
        ctx.n(r.q_in),
        ctx.n(r.q_out),
        ctx.n(r.entropy_in),
        ctx.n(r.entropy_out),
        ctx.n(r.work_expand),
        ctx.n(r.work_compress),
        ctx.n(r.w_net),
        ctx.n(r.mechanical_work()),
        ctx.n(r.efficiency),
        ctx.n(1.0 - spec.t2 / spec.t1),
        ctx.n(r.closure_error),
    ]);
    Ok((states, summary))
}
