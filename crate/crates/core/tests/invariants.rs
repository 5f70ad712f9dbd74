use approx::assert_relative_eq;
use nhqhe_core::classical::{classical_cycle, ClassicalSpec, GasState};
use nhqhe_core::cycle::{otto_report, Orientation, OttoSpec};
use nhqhe_core::evolve::{exact_propagator, segment_propagator, DriveSegment};
use nhqhe_core::SystemParams;
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn otto() -> impl Strategy<Value = OttoSpec> {
    (
        0.05f64..0.9,
        1.0f64..4.0,
        0.1f64..0.9,
        0.1f64..1.5,
        0.05f64..0.45,
    )
        .prop_map(|(gamma, j1, frac, dphi, p0)| {
            let params = SystemParams::new(gamma).unwrap();
            OttoSpec::new(params, j1, j1 * frac, 0.0, dphi, p0).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn otto_cycle_conserves_state_functions(spec in otto()) {
        let r = otto_report(&spec, Orientation::Engine, TOL).unwrap();
        let scale = r.processes.iter().map(|p| p.dq.abs()).fold(1.0, f64::max);
        prop_assert!(r.totals.du.abs() <= 1e-10 * scale);
        prop_assert!(r.totals.ds.abs() <= 1e-10 * scale);
        for p in &r.processes {
            prop_assert!((p.du - p.dq - p.dw).abs() <= 1e-12 * scale);
        }
        let eta = r.efficiency.unwrap();
        prop_assert!((eta - (1.0 - spec.j2 / spec.j1)).abs() < 1e-9);
    }

    #[test]
    fn refrigerator_reverses_every_total(spec in otto()) {
        let e = otto_report(&spec, Orientation::Engine, TOL).unwrap();
        let f = otto_report(&spec, Orientation::Refrigerator, TOL).unwrap();
        let scale = e.work_output().abs().max(1e-3);
        prop_assert!((e.work_output() + f.work_output()).abs() <= 1e-10 * scale);
        prop_assert!((e.totals.dq + f.totals.dq).abs() <= 1e-10 * scale);
    }

    #[test]
    fn sqrt_units_rescale_energy_but_not_entropy(spec in otto()) {
        let r = otto_report(&spec, Orientation::Engine, TOL).unwrap();
        let s = r.in_sqrt_units();
        let a = spec.params.spectral_factor();
        for (p, q) in r.processes.iter().zip(&s.processes) {
            assert_relative_eq!(q.dq * a, p.dq, max_relative = 1e-14, epsilon = 1e-300);
            prop_assert_eq!(q.ds, p.ds);
        }
    }

    #[test]
    fn split_sweep_composes(gamma in 0.0f64..0.9, omega in -2.0f64..2.0,
                                  t1 in 0.0f64..4.0, t2 in 0.0f64..4.0) {
        let p = SystemParams::new(gamma).unwrap();
        let whole = exact_propagator(&p, omega, t1 + t2);
        let tail = DriveSegment::new(omega, t2, omega * t1).unwrap();
        let split = segment_propagator(&p, &tail).u * exact_propagator(&p, omega, t1);
        let scale = whole.frobenius_norm().max(1.0);
        prop_assert!((whole - split).frobenius_norm() <= 1e-12 * scale);
    }

    #[test]
    fn classical_cycle_reaches_carnot(t1 in 1.5f64..10.0, ratio in 0.1f64..0.9,
                                      x in 0.01f64..2.0, n in 0.5f64..5.0) {
        let gas = GasState::new(n, t1, 2.0, 1.5, 10.0, 1.0).unwrap();
        let r = classical_cycle(&ClassicalSpec::new(t1 * ratio, x, gas).unwrap()).unwrap();
        assert_relative_eq!(r.efficiency, 1.0 - ratio, max_relative = 1e-12);
        assert_relative_eq!(r.entropy_in, r.entropy_out, max_relative = 1e-12);
        prop_assert!(r.closure_error < 1e-12);
    }
}
