use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use qdemon_core::dynamics::{
    build_dispersive, build_driven_cavity, build_driven_qubit, driven_qubit_hamiltonian,
    lindblad_step, measurement_rate, simulate_trajectory, Frame, HamiltonianSpec, LindbladChannel,
    LindbladIntegrator, LindbladScheme, SmeConfig, SmeIntegrator,
};
use qdemon_core::parallel::{map_trials, trial_rng, Execution};
use qdemon_core::quantum::{
    expectation, sigma_x, sigma_y, sigma_z, CMatrix, DensityMatrix, HilbertSpace, Operator,
    PureState, C64,
};
use rand::Rng;
use rand_distr::StandardNormal;

/// Column-stacked Liouvillian of `−i[H,·] + Σ D[c]` for a qubit.
fn liouvillian(h: &CMatrix, jumps: &[CMatrix]) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let i = C64::new(0.0, 1.0);
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * -i;
    for c in jumps {
        let cdc = c.adjoint() * c;
        l += c.conjugate().kronecker(c);
        l -= (id.kronecker(&cdc) + cdc.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    }
    l
}

/// Taylor series with scaling and squaring.
fn expm(a: &CMatrix) -> CMatrix {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
    let n = a.nrows();
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / C64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

fn evolve_exact(l: &CMatrix, rho0: &CMatrix, t: f64) -> CMatrix {
    let n = rho0.nrows();
    let v = CMatrix::from_column_slice(n * n, 1, rho0.as_slice());
    let out = expm(&(l * C64::new(t, 0.0))) * v;
    CMatrix::from_column_slice(n, n, out.as_slice())
}

#[test]
fn identity_map_without_dynamics() {
    let rho = DensityMatrix::from_bloch(0.3, -0.2, 0.5).unwrap();
    let h = Operator::zeros(&HilbertSpace::qubit());
    let next = lindblad_step(&rho, &h, &[], 1e-2).unwrap();
    assert!((next.matrix() - rho.matrix()).camax() < 1e-15);
}

#[test]
fn dephasing_matches_closed_form() {
    let gamma_m = 1.0;
    let dt = 1e-3;
    let rho = DensityMatrix::from_bloch(1.0, 0.0, 0.0).unwrap();
    let ch = LindbladChannel::measurement_dephasing(gamma_m, &HilbertSpace::qubit()).unwrap();
    let h = Operator::zeros(&HilbertSpace::qubit());
    let integ = LindbladIntegrator::new(&h, &[ch], dt, LindbladScheme::default()).unwrap();
    let states = integ.evolve(&rho, 1000).unwrap();
    let coherence = 2.0 * states[1000].matrix()[(0, 1)].norm();
    assert_abs_diff_eq!(coherence, (-1.0f64).exp(), epsilon = 1e-4);
}

#[test]
fn decay_matches_closed_form() {
    let gamma_a = 0.5;
    let ch = LindbladChannel::qubit_decay(gamma_a, &HilbertSpace::qubit()).unwrap();
    let h = Operator::zeros(&HilbertSpace::qubit());
    let integ = LindbladIntegrator::new(&h, &[ch], 1e-3, LindbladScheme::default()).unwrap();
    let states = integ
        .evolve(&PureState::excited().to_density(), 2000)
        .unwrap();
    assert_abs_diff_eq!(
        states[2000].populations()[1],
        (-1.0f64).exp(),
        epsilon = 1e-6
    );
}

#[test]
fn lindblad_integrator_matches_liouvillian_exponential() {
    let h = driven_qubit_hamiltonian(0.3, 1.0);
    let space = HilbertSpace::qubit();
    let channels = [
        LindbladChannel::measurement_dephasing(0.8, &space).unwrap(),
        LindbladChannel::qubit_decay(0.2, &space).unwrap(),
    ];
    let jumps: Vec<CMatrix> = channels
        .iter()
        .map(|c| c.operator.matrix() * C64::new(c.rate.sqrt(), 0.0))
        .collect();
    let l = liouvillian(h.matrix(), &jumps);
    let rho0 = DensityMatrix::from_bloch(0.1, 0.6, -0.7).unwrap();
    let integ = LindbladIntegrator::new(&h, &channels, 1e-2, LindbladScheme::RungeKutta4).unwrap();
    let states = integ.evolve(&rho0, 200).unwrap();
    let exact = evolve_exact(&l, rho0.matrix(), 2.0);
    assert!((states[200].matrix() - exact).camax() < 1e-8);
}

#[test]
fn measurement_rate_examples() {
    let z = C64::new(0.0, 0.0);
    assert_eq!(measurement_rate(1.0, z, z).unwrap(), 0.0);
    assert_abs_diff_eq!(
        measurement_rate(1.0, C64::new(2.0, 0.0), z).unwrap(),
        2.0,
        epsilon = 1e-15
    );
    let base = measurement_rate(0.7, C64::new(0.3, 0.1), C64::new(-0.2, 0.4)).unwrap();
    let doubled = measurement_rate(0.7, C64::new(0.6, 0.2), C64::new(-0.4, 0.8)).unwrap();
    assert_abs_diff_eq!(doubled, 4.0 * base, epsilon = 1e-14);
}

#[test]
fn unmonitored_rabi_oscillation() {
    let cfg = SmeConfig::new(1e-3, 0.5, 0.0, 3).unwrap();
    let h = driven_qubit_hamiltonian(0.0, 1.3);
    let rec = simulate_trajectory(&PureState::ground().to_density(), &h, &cfg, 1.0, &[]).unwrap();
    for (t, rho) in rec.times.iter().zip(&rec.states).step_by(100) {
        let z = expectation(rho, &sigma_z()).unwrap().re;
        assert_abs_diff_eq!(z, -(2.0 * 1.3 * t).cos(), epsilon = 1e-5);
    }
}

#[test]
fn no_efficiency_no_drive_keeps_populations() {
    let cfg = SmeConfig::new(1e-2, 0.0, 1.0, 8).unwrap();
    let h = driven_qubit_hamiltonian(0.0, 0.0);
    let rho0 = DensityMatrix::from_bloch(0.6, 0.0, 0.3).unwrap();
    let rec = simulate_trajectory(&rho0, &h, &cfg, 1.0, &[]).unwrap();
    for rho in &rec.states {
        assert_abs_diff_eq!(
            expectation(rho, &sigma_z()).unwrap().re,
            0.3,
            epsilon = 1e-12
        );
    }
}

#[test]
fn unit_efficiency_preserves_purity() {
    let cfg = SmeConfig::new(1e-2, 1.0, 1.0, 11).unwrap();
    let h = driven_qubit_hamiltonian(0.0, 1.0);
    let rho0 = PureState::qubit_superposition(1.0, 0.4).to_density();
    let rec = simulate_trajectory(&rho0, &h, &cfg, 10.0, &[]).unwrap();
    assert_eq!(rec.states.len(), 1001);
    for rho in &rec.states {
        assert!((rho.purity() - 1.0).abs() < 5e-4);
        assert!(rho.hermitian_defect() < 1e-10);
        assert!((rho.trace().re - 1.0).abs() < 1e-9);
    }
}

#[test]
fn record_mean_follows_sigma_z() {
    let cfg = SmeConfig::new(1e-2, 0.4, 1.0, 0).unwrap();
    let integ = SmeIntegrator::new(&driven_qubit_hamiltonian(0.0, 0.5), cfg, &[]).unwrap();
    let rho = DensityMatrix::from_bloch(0.2, 0.1, 0.6).unwrap();
    let mut rng = trial_rng(42, 0);
    let n = 100_000;
    let sqrt_dt = cfg.dt.sqrt();
    let samples: Vec<f64> = (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            integ.step(&rho, z * sqrt_dt).1
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let expected = (2.0f64 * 0.4 * 1.0).sqrt() * 0.6 * cfg.dt;
    assert!((mean - expected).abs() < 3.0 * (var / n as f64).sqrt());
}

#[test]
fn same_seed_same_record() {
    let cfg = SmeConfig::new(1e-2, 0.3, 1.0, 99).unwrap();
    let h = driven_qubit_hamiltonian(0.0, 1.0);
    let rho0 = PureState::ground().to_density();
    let a = simulate_trajectory(&rho0, &h, &cfg, 1.0, &[]).unwrap();
    let b = simulate_trajectory(&rho0, &h, &cfg, 1.0, &[]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn step_size_and_step_count_are_enforced() {
    let h = driven_qubit_hamiltonian(0.0, 1.0);
    let rho0 = PureState::ground().to_density();
    let coarse = SmeConfig::new(0.2, 0.3, 1.0, 1).unwrap();
    assert!(simulate_trajectory(&rho0, &h, &coarse, 1.0, &[]).is_err());
    let cfg = SmeConfig::new(0.03, 0.3, 1.0, 1).unwrap();
    assert!(simulate_trajectory(&rho0, &h, &cfg, 1.0, &[]).is_err());
}

/// Ensemble mean of conditioned states against the exact unconditional
/// solution, pointwise within 3 standard errors.
#[test]
fn ensemble_average_matches_lindblad() {
    let (gamma_m, eta, rabi, dt, steps) = (1.0, 0.3, 1.0, 1e-2, 100);
    let h = driven_qubit_hamiltonian(0.0, rabi);
    let space = HilbertSpace::qubit();
    let decay = LindbladChannel::qubit_decay(0.2, &space).unwrap();
    let mut channels = vec![LindbladChannel::measurement_dephasing(gamma_m, &space).unwrap()];
    channels.push(decay.clone());
    let jumps: Vec<CMatrix> = channels
        .iter()
        .map(|c| c.operator.matrix() * C64::new(c.rate.sqrt(), 0.0))
        .collect();
    let l = liouvillian(h.matrix(), &jumps);
    let rho0 = DensityMatrix::from_bloch(0.5, 0.3, -0.6).unwrap();

    let n = 10_000;
    let cfg = SmeConfig::new(dt, eta, gamma_m, 0).unwrap();
    let integ = SmeIntegrator::new(&h, cfg, &[decay]).unwrap();
    let sx = sigma_x();
    let sz = sigma_z();
    let sy = sigma_y();
    let samples = map_trials(n, Execution::default(), |k| {
        let mut rng = trial_rng(2024, k as u64);
        let rec = integ.run(&rho0, steps, &sz, &mut rng).unwrap();
        rec.states
            .iter()
            .step_by(10)
            .map(|r| {
                [
                    expectation(r, &sx).unwrap().re,
                    expectation(r, &sz).unwrap().re,
                    expectation(r, &sy).unwrap().re,
                ]
            })
            .collect::<Vec<_>>()
    });
    for (idx, t) in (0..=steps).step_by(10).enumerate() {
        let exact = DensityMatrix::new(space.clone(), {
            let m = evolve_exact(&l, rho0.matrix(), t as f64 * dt);
            (&m + m.adjoint()) * C64::new(0.5, 0.0)
        })
        .unwrap();
        let target = [
            expectation(&exact, &sx).unwrap().re,
            expectation(&exact, &sz).unwrap().re,
            expectation(&exact, &sy).unwrap().re,
        ];
        for q in 0..3 {
            let xs: Vec<f64> = samples.iter().map(|s| s[idx][q]).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt().max(1e-12);
            assert!(
                (mean - target[q]).abs() < 3.0 * se + 1e-9,
                "t = {}, observable {q}: {mean} vs {} (se {se})",
                t as f64 * dt,
                target[q]
            );
        }
    }
}

fn spec_strategy() -> impl Strategy<Value = HamiltonianSpec> {
    (
        0.1f64..10.0,
        0.1f64..10.0,
        0.0f64..1.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -2.0f64..2.0,
        -3.2f64..3.2,
    )
        .prop_map(|(wq, wc, chi, dq, dc, om, omc, phase)| HamiltonianSpec {
            qubit_freq: wq,
            cavity_freq: wc,
            chi,
            qubit_detuning: dq,
            cavity_detuning: dc,
            qubit_drive: om,
            cavity_drive: omc,
            cavity_drive_phase: phase,
            frame: Frame::Lab,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn builders_are_hermitian(spec in spec_strategy(), n_cav in 2usize..12) {
        for h in [
            build_dispersive(&spec, n_cav).unwrap(),
            build_driven_qubit(&spec, n_cav).unwrap(),
            build_driven_cavity(&spec, n_cav).unwrap(),
        ] {
            prop_assert!(h.hermitian_defect() < 1e-12);
            prop_assert_eq!(h.space().dim(), 2 * n_cav);
        }
    }

    #[test]
    fn lindblad_steps_keep_a_valid_state(
        x in -0.5f64..0.5, y in -0.5f64..0.5, z in -0.5f64..0.5,
        rabi in -1.0f64..1.0, gm in 0.0f64..2.0, ga in 0.0f64..2.0,
    ) {
        let rho = DensityMatrix::from_bloch(x, y, z).unwrap();
        let space = HilbertSpace::qubit();
        let ch = [
            LindbladChannel::measurement_dephasing(gm, &space).unwrap(),
            LindbladChannel::qubit_decay(ga, &space).unwrap(),
        ];
        let next = lindblad_step(&rho, &driven_qubit_hamiltonian(0.0, rabi), &ch, 1e-2).unwrap();
        prop_assert!(next.hermitian_defect() < 1e-10);
        prop_assert!((next.trace().re - 1.0).abs() < 1e-9);
        prop_assert!(next.eigenvalues()[0] > -1e-9);
    }
}
