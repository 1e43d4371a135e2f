use approx::assert_abs_diff_eq;
use qdemon_core::demons::{direct_work, run_autonomous_demon, AutonomousDemonConfig, QubitInit};
use qdemon_core::quantum::{von_neumann_entropy, C64};

fn cfg(alpha: f64, init: QubitInit) -> AutonomousDemonConfig {
    AutonomousDemonConfig {
        alpha: C64::new(alpha, 0.0),
        initial_qubit: init,
        ..AutonomousDemonConfig::default()
    }
}

#[test]
fn excited_qubit_always_gives_one_quantum() {
    let r = run_autonomous_demon(&cfg(1.5, QubitInit::Excited)).unwrap();
    assert_abs_diff_eq!(r.final_excited, 0.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.delta_u, 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(r.rho_d.populations()[0], 1.0, epsilon = 1e-12);
}

#[test]
fn ground_qubit_leaks_with_vacuum_overlap() {
    for alpha in [0.5, 1.0, 2.0] {
        let r = run_autonomous_demon(&cfg(alpha, QubitInit::Ground)).unwrap();
        let leak = (-alpha * alpha).exp();
        assert_abs_diff_eq!(r.final_excited, leak, epsilon = 1e-6);
        assert_abs_diff_eq!(r.delta_u, -leak, epsilon = 1e-6);
    }
}

#[test]
fn ideal_gates_are_unitary() {
    let r = run_autonomous_demon(&cfg(
        1.2,
        QubitInit::Superposed {
            theta: 1.1,
            phi: 0.3,
        },
    ))
    .unwrap();
    assert!((r.joint_displaced.purity() - 1.0).abs() < 1e-10);
    assert!((r.joint_final.purity() - 1.0).abs() < 1e-10);
    let mut a = r.rho_s.eigenvalues();
    let mut b = r.rho_d.eigenvalues();
    a.sort_by(|x, y| y.total_cmp(x));
    b.sort_by(|x, y| y.total_cmp(x));
    for (k, x) in a.iter().enumerate() {
        assert!((x - b[k]).abs() < 1e-9);
    }
    assert!(b[2..].iter().all(|x| x.abs() < 1e-9));
    assert_abs_diff_eq!(r.entropies.qubit, r.entropies.cavity, epsilon = 1e-9);
    assert_abs_diff_eq!(r.entropies.joint, 0.0, epsilon = 1e-9);

    let thermal = run_autonomous_demon(&cfg(1.2, QubitInit::Thermal { p_e: 0.3 })).unwrap();
    assert_abs_diff_eq!(
        thermal.joint_final.purity(),
        0.7 * 0.7 + 0.3 * 0.3,
        epsilon = 1e-10
    );
    assert_abs_diff_eq!(
        thermal.entropies.joint,
        thermal.entropies.qubit_initial,
        epsilon = 1e-9
    );
}

#[test]
fn cavity_coherences_track_initial_coherence() {
    let sup = run_autonomous_demon(&cfg(
        1.0,
        QubitInit::Superposed {
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
        },
    ))
    .unwrap();
    let th = run_autonomous_demon(&cfg(1.0, QubitInit::Thermal { p_e: 0.5 })).unwrap();
    let row0 = |m: &qdemon_core::quantum::DensityMatrix| {
        (1..m.matrix().ncols())
            .map(|k| m.matrix()[(0, k)].norm())
            .fold(0.0, f64::max)
    };
    assert!(row0(&sup.rho_d) > 0.01);
    assert!(row0(&th.rho_d) < 1e-10);
}

#[test]
fn qubit_entropy_rises_then_falls() {
    let init = QubitInit::Thermal { p_e: 0.3 };
    let s0 = von_neumann_entropy(&init.state().unwrap()).unwrap();
    let curve: Vec<f64> = (0..10)
        .map(|k| {
            let r = run_autonomous_demon(&cfg(0.4 * k as f64, init)).unwrap();
            r.entropies.qubit
        })
        .collect();
    assert_abs_diff_eq!(curve[0], s0, epsilon = 1e-12);
    let (peak, max) =
        curve.iter().enumerate().fold(
            (0, f64::MIN),
            |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
        );
    assert!(peak > 0 && peak < curve.len() - 1, "{curve:?}");
    assert!(max > s0);
    assert!(*curve.last().unwrap() < s0);
}

#[test]
fn work_changes_sign_with_photon_number() {
    let init = QubitInit::Thermal { p_e: 0.3 };
    let small = run_autonomous_demon(&cfg(0.1f64.sqrt(), init)).unwrap();
    let large = run_autonomous_demon(&cfg(3.0, init)).unwrap();
    assert!(small.delta_u < 0.0 && small.work_direct < 0.0);
    assert!(large.delta_u > 0.0 && large.work_direct > 0.0);
}

#[test]
fn direct_work_matches_energy_change_with_weak_emission() {
    for alpha in [0.5, 1.0, 2.0, 3.0] {
        let mut c = cfg(alpha, QubitInit::Thermal { p_e: 0.3 });
        c.gamma_a = 0.005;
        assert!(c.gamma_a * c.pi_duration() < 0.01);
        let r = run_autonomous_demon(&c).unwrap();
        let rel = (r.work_direct - r.delta_u).abs() / r.delta_u.abs();
        assert!(
            rel < 0.02,
            "alpha {alpha}: {} vs {}",
            r.work_direct,
            r.delta_u
        );
    }
}

#[test]
fn direct_work_examples() {
    let n = 2001;
    let t = 3.0;
    let held = direct_work(&vec![1.0; n], &vec![0.0; n], 0.2, 0.0, t).unwrap();
    assert_abs_diff_eq!(held, 0.2 * t, epsilon = 1e-12);

    let rabi = 0.7;
    let t_pi = std::f64::consts::PI / (2.0 * rabi);
    let times: Vec<f64> = (0..n).map(|k| t_pi * k as f64 / (n - 1) as f64).collect();
    let sz: Vec<f64> = times.iter().map(|t| (2.0 * rabi * t).cos()).collect();
    let sx: Vec<f64> = times.iter().map(|t| (2.0 * rabi * t).sin()).collect();
    let down = direct_work(&sz, &sx, 0.0, 2.0 * rabi, t_pi).unwrap();
    assert_abs_diff_eq!(down, 1.0, epsilon = 1e-6);
    let neg = |v: &[f64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let up = direct_work(&neg(&sz), &neg(&sx), 0.0, 2.0 * rabi, t_pi).unwrap();
    assert_abs_diff_eq!(up, -1.0, epsilon = 1e-6);
}

#[test]
fn pulse_trace_flips_excited_qubit() {
    let r = run_autonomous_demon(&cfg(0.0, QubitInit::Excited)).unwrap();
    assert_abs_diff_eq!(r.pulse_sigma_z[0], 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(*r.pulse_sigma_z.last().unwrap(), -1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(r.work_direct, 1.0, epsilon = 1e-6);
}

#[test]
fn default_truncation_is_large_enough() {
    for alpha in [0.5, 2.0, 4.0] {
        let c = cfg(alpha, QubitInit::Ground);
        assert!(c.validate().is_ok());
        let too_small = AutonomousDemonConfig {
            n_cav: Some(3),
            ..c
        };
        if alpha > 1.0 {
            assert!(too_small.validate().is_err());
        }
    }
}
