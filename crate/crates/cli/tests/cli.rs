use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nhqhe_cli::format::{number, parse};
use nhqhe_core::cycle::{table, OttoSpec};
use nhqhe_core::thermo::{entropy, internal_energy, temperature, MixedState, Preparation};
use nhqhe_core::{ControlPoint, SystemParams};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn nhqhe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhqhe"))
        .args(args)
        .env_remove("NHQHE_TOL")
        .output()
        .expect("binary runs")
}

fn run_mode(mode: &str, config: &str, extra: &[&str]) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = fixture(config);
    let mut args = vec![
        mode,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let out = nhqhe(&args);
    (dir, out)
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn otto_spec() -> OttoSpec {
    OttoSpec::new(SystemParams::new(0.5).unwrap(), 2.0, 1.0, 0.0, 1.0, 0.3).unwrap()
}

#[test]
fn otto_matches_golden_files() {
    let (dir, out) = run_mode("otto", "otto.toml", &[]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for (produced, golden) in [
        ("corners.csv", "golden/otto_corners.csv"),
        ("processes.csv", "golden/otto_processes.csv"),
    ] {
        let a = fs::read_to_string(dir.path().join(produced)).unwrap();
        let b = fs::read_to_string(fixture(golden)).unwrap();
        assert_eq!(a, b, "{produced} differs from {golden}");
    }
    let report = fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("efficiency: 0.5"));
    assert!(report.contains("Exact evolution"));
}

#[test]
fn otto_corners_equal_table_closed_forms() {
    let (dir, out) = run_mode("otto", "otto.toml", &["--sqrt-units"]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("corners.csv"));
    let spec = otto_spec();
    for (row, closed) in rows.iter().zip(table::state_rows(&spec)) {
        assert_eq!(row[0], closed.corner.label());
        assert_eq!(row[9], "true");
        let cells = [
            (3, closed.t.value()),
            (4, closed.eps_plus),
            (5, closed.p_plus),
            (6, closed.p_minus),
            (7, closed.u),
            (8, closed.s),
        ];
        for (col, expected) in cells {
            let got = parse(&row[col]).unwrap();
            assert!(
                (got - expected).abs() <= 1e-11 * expected.abs(),
                "{} col {col}: {got} vs {expected}",
                row[0]
            );
        }
    }
    let procs = read_csv(&dir.path().join("processes.csv"));
    for (row, closed) in procs.iter().zip(table::process_rows(&spec)) {
        assert_eq!(row[0], closed.leg.label());
        for (col, expected) in [
            (2, closed.du),
            (3, closed.dq),
            (4, closed.dw),
            (5, closed.ds),
        ] {
            let got = parse(&row[col]).unwrap();
            assert!(
                (got - expected).abs() <= 1e-11 * expected.abs().max(1e-3),
                "{} col {col}",
                row[0]
            );
        }
    }
}

#[test]
fn outputs_are_deterministic() {
    for (mode, cfg) in [
        ("otto", "otto.toml"),
        ("loop", "loop_ellipse.toml"),
        ("evolve", "evolve.toml"),
        ("eigs", "eigs.toml"),
        ("classical", "classical.toml"),
    ] {
        let (a, oa) = run_mode(mode, cfg, &[]);
        let (b, ob) = run_mode(mode, cfg, &[]);
        assert!(oa.status.success() && ob.status.success(), "{mode}");
        let mut names: Vec<_> = fs::read_dir(a.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        assert!(!names.is_empty());
        for n in names {
            assert_eq!(
                fs::read(a.path().join(&n)).unwrap(),
                fs::read(b.path().join(&n)).unwrap(),
                "{mode}: {n:?}"
            );
        }
    }
}

#[test]
fn corner_states_round_trip_through_thermo() {
    let (dir, out) = run_mode("otto", "otto.toml", &[]);
    assert!(out.status.success());
    let spec = otto_spec();
    let prep = Preparation::new(spec.p0, spec.phi1).unwrap();
    for row in read_csv(&dir.path().join("corners.csv")) {
        let f = |k: usize| parse(&row[k]).unwrap();
        let point = ControlPoint::new(f(1), f(2)).unwrap();
        let state = MixedState::new(point, f(5), f(6), prep).unwrap();
        let recomputed = [
            temperature(&state, &spec.params).value(),
            internal_energy(&state, &spec.params),
            entropy(&state, &spec.params),
        ];
        for (x, col) in recomputed.iter().zip([3, 7, 8]) {
            let written = f(col);
            // one unit in the twelfth significant digit
            let ulp = 10f64.powf(written.abs().log10().floor() - 11.0);
            assert!(
                (x - written).abs() <= ulp,
                "{} col {col}: {x} vs {written}",
                row[0]
            );
            assert_eq!(number(parse(&row[col]).unwrap(), 12), row[col]);
        }
    }
}

#[test]
fn classical_matches_golden_file() {
    let (dir, out) = run_mode("classical", "classical.toml", &[]);
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("classical.csv")).unwrap(),
        fs::read_to_string(fixture("golden/classical.csv")).unwrap()
    );
    let summary = read_csv(&dir.path().join("classical_summary.csv"));
    assert_eq!(summary[0][8], "0.25");
}

#[test]
fn hermitian_loop_has_no_net_heat() {
    let (dir, out) = run_mode("loop", "loop_hermitian.toml", &[]);
    assert!(out.status.success());
    let summary = read_csv(&dir.path().join("loop_summary.csv"));
    let q = parse(&summary[0][0]).unwrap();
    assert!(q.abs() <= 1e-12);
    let trace = read_csv(&dir.path().join("loop.csv"));
    assert_eq!(trace.len(), 4 * 8 + 1);
    for row in trace {
        assert!(parse(&row[8]).unwrap().abs() <= 1e-12);
    }
}

#[test]
fn non_hermitian_loop_converts_heat_to_work() {
    let (dir, out) = run_mode("loop", "loop_ellipse.toml", &[]);
    assert!(out.status.success());
    let s = &read_csv(&dir.path().join("loop_summary.csv"))[0];
    let (q, w, u) = (
        parse(&s[0]).unwrap(),
        parse(&s[1]).unwrap(),
        parse(&s[2]).unwrap(),
    );
    assert!(q > 1e-3);
    assert!((q + w).abs() < 1e-10);
    assert!(u.abs() < 1e-10);
}

#[test]
fn evolve_starts_at_identity_with_small_defect() {
    let (dir, out) = run_mode("evolve", "evolve.toml", &["--precision", "8"]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("evolve.csv"));
    assert_eq!(rows.len(), 3 * 4 + 1);
    assert_eq!(
        rows[0][1..9],
        ["1.0", "0.0", "0.0", "0.0", "0.0", "0.0", "1.0", "0.0"]
    );
    assert_eq!(rows.last().unwrap()[0], "12.0");
    for r in &rows {
        assert!(parse(&r[9]).unwrap() < 1e-10);
    }
}

#[test]
fn eigs_reports_real_spectrum() {
    let (dir, out) = run_mode("eigs", "eigs.toml", &["--sqrt-units"]);
    assert!(out.status.success());
    let rows = read_csv(&dir.path().join("eigs.csv"));
    assert_eq!(rows[1][2], "2.0");
    assert_eq!(rows[1][4], "1.25");
}

#[test]
fn exit_codes() {
    let (_d, out) = run_mode("otto", "exceptional_point.toml", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("exceptional point"));

    let (_d, out) = run_mode("loop", "otto.toml", &[]);
    assert_eq!(out.status.code(), Some(2));

    let (_d, out) = run_mode("evolve", "evolve_gap.toml", &[]);
    assert_eq!(out.status.code(), Some(2));

    let out = nhqhe(&["otto", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_override_from_environment() {
    let dir = TempDir::new().unwrap();
    let cfg = fixture("loop_ellipse.toml");
    let args = [
        "loop",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let bad = Command::new(env!("CARGO_BIN_EXE_nhqhe"))
        .args(args)
        .env("NHQHE_TOL", "zero")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let tight = Command::new(env!("CARGO_BIN_EXE_nhqhe"))
        .args(args)
        .env("NHQHE_TOL", "1e-13")
        .output()
        .unwrap();
    assert!(tight.status.success());
}

#[test]
fn check_mode_passes() {
    let out = nhqhe(&["check", "--seed", "1"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 11);
    let cfg = fixture("check.toml");
    assert!(nhqhe(&["check", "--config", cfg.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn every_fixture_config_parses_or_is_rejected_as_intended() {
    for entry in fs::read_dir(fixture("")).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let r = nhqhe_cli::load_config(&path);
            let name = path.file_name().unwrap().to_str().unwrap();
            let rejected = matches!(name, "exceptional_point.toml" | "evolve_gap.toml");
            assert_eq!(r.is_err(), rejected, "{name}");
        }
    }
}
