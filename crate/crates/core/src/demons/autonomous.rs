//! Autonomous demon: a cavity (the demon's memory) displaced conditionally on
//! the qubit being in `|g⟩`, followed by a qubit π-pulse conditioned on the
//! cavity being empty.
//!
//! The π-pulse is also integrated in time (`H = Ω σ_y ⊗ |0⟩⟨0|` plus qubit
//! decay) to evaluate the work delivered to the drive from the qubit
//! expectation values alone.

use nalgebra::DMatrix;

use crate::dynamics::{build_driven_cavity, build_driven_qubit, Frame, HamiltonianSpec};
use crate::error::{invalid, Error, Result};
use crate::quantum::{
    coherent_state, default_truncation, displacement, partial_trace, sigma_x, von_neumann_entropy,
    CMatrix, DensityMatrix, HilbertSpace, Operator, PureState, Tensor, C64, I, ONE, ZERO,
};

use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GateModel {
    /// Exact conditional unitaries.
    #[default]
    IdealGates,
    /// Photon-number-selective pulses generated by the driven Hamiltonians.
    PulsedHamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QubitInit {
    Ground,
    Excited,
    /// `cos(θ/2)|g⟩ + e^{iφ} sin(θ/2)|e⟩`.
    Superposed {
        theta: f64,
        phi: f64,
    },
    /// Diagonal state with excited population `p_e`.
    Thermal {
        p_e: f64,
    },
}

impl QubitInit {
    pub fn state(&self) -> Result<DensityMatrix> {
        match *self {
            QubitInit::Ground => Ok(PureState::ground().to_density()),
            QubitInit::Excited => Ok(PureState::excited().to_density()),
            QubitInit::Superposed { theta, phi } => {
                if !(theta.is_finite() && phi.is_finite()) {
                    return Err(invalid("initial_qubit", "angles must be finite"));
                }
                Ok(PureState::qubit_superposition(theta, phi).to_density())
            }
            QubitInit::Thermal { p_e } => DensityMatrix::thermal_qubit(p_e),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutonomousDemonConfig {
    /// Target displacement of the cavity for a qubit in `|g⟩`.
    pub alpha: C64,
    /// Fock truncation; `None` picks `ceil(|α|² + 6|α| + 10)`.
    pub n_cav: Option<usize>,
    pub gate_model: GateModel,
    pub initial_qubit: QubitInit,
    /// Qubit emission rate during the π-pulse.
    pub gamma_a: f64,
    /// Coefficient of `σ_y` during the π-pulse; `t_π = π/(2·rabi)`.
    pub rabi: f64,
    /// Time steps used to resolve the π-pulse.
    pub pulse_steps: usize,
    /// Dispersive shift for the pulsed-Hamiltonian model.
    pub chi: f64,
}

impl Default for AutonomousDemonConfig {
    fn default() -> Self {
        Self {
            alpha: C64::new(1.0, 0.0),
            n_cav: None,
            gate_model: GateModel::IdealGates,
            initial_qubit: QubitInit::Thermal { p_e: 0.3 },
            gamma_a: 0.0,
            rabi: 1.0,
            pulse_steps: 2000,
            chi: 1.0,
        }
    }
}

impl AutonomousDemonConfig {
    pub fn truncation(&self) -> usize {
        self.n_cav.unwrap_or_else(|| default_truncation(self.alpha))
    }

    pub fn pi_duration(&self) -> f64 {
        PI / (2.0 * self.rabi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.re.is_finite() && self.alpha.im.is_finite()) {
            return Err(invalid("alpha", "must be finite"));
        }
        if !(self.gamma_a >= 0.0 && self.gamma_a.is_finite()) {
            return Err(invalid(
                "gamma_a",
                format!("{} must be finite and >= 0", self.gamma_a),
            ));
        }
        if !(self.rabi > 0.0 && self.rabi.is_finite()) {
            return Err(invalid(
                "rabi",
                format!("{} must be finite and > 0", self.rabi),
            ));
        }
        if self.pulse_steps == 0 {
            return Err(invalid("pulse_steps", "must be >= 1"));
        }
        if !(self.chi > 0.0 && self.chi.is_finite()) {
            return Err(invalid(
                "chi",
                format!("{} must be finite and > 0", self.chi),
            ));
        }
        if self.gate_model == GateModel::PulsedHamiltonian && self.gamma_a > 0.0 {
            return Err(invalid(
                "gamma_a",
                "the pulsed-hamiltonian model is unitary; set gamma_a = 0",
            ));
        }
        self.initial_qubit.state()?;
        // fails on insufficient truncation
        coherent_state(self.alpha, self.truncation())?;
        Ok(())
    }
}

/// Entropies (nats) of the initial qubit, final qubit, final cavity, and
/// final joint state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entropies {
    pub qubit_initial: f64,
    pub qubit: f64,
    pub cavity: f64,
    pub joint: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutonomousResult {
    pub rho_s: DensityMatrix,
    pub rho_d: DensityMatrix,
    /// Joint state after the conditional displacement.
    pub joint_displaced: DensityMatrix,
    /// Joint state at the end of the protocol.
    pub joint_final: DensityMatrix,
    /// Work extracted from the drive power during the π-pulse (units of `ω_q`).
    pub work_direct: f64,
    /// `E(t_i) − E(t_f)` from qubit populations (units of `ω_q`).
    pub delta_u: f64,
    pub entropies: Entropies,
    /// Excited population of the qubit at the end.
    pub final_excited: f64,
    /// `⟨σ_z⟩` and `⟨σ_x⟩` of the qubit on the π-pulse grid.
    pub pulse_sigma_z: Vec<f64>,
    pub pulse_sigma_x: Vec<f64>,
    pub t_pi: f64,
}

/// Work extracted from the drive, `∫₀^{t_π} [γ_a(1+⟨σ_z⟩)/2 + (Ω_R/2)⟨σ_x⟩] dt`
/// by the trapezoidal rule, with samples on a uniform grid over `[0, t_π]`.
/// `rabi_frequency` is the angular Rabi frequency (twice the `σ_y`
/// coefficient).
pub fn direct_work(
    sigma_z: &[f64],
    sigma_x: &[f64],
    gamma_a: f64,
    rabi_frequency: f64,
    t_pi: f64,
) -> Result<f64> {
    if sigma_z.len() != sigma_x.len() {
        return Err(Error::DimensionMismatch {
            expected: sigma_z.len(),
            got: sigma_x.len(),
        });
    }
    if sigma_z.len() < 2 {
        return Err(invalid("sigma_z", "need at least two samples"));
    }
    let h = t_pi / (sigma_z.len() - 1) as f64;
    let power: Vec<f64> = sigma_z
        .iter()
        .zip(sigma_x)
        .map(|(z, x)| gamma_a * (1.0 + z) / 2.0 + rabi_frequency / 2.0 * x)
        .collect();
    let inner: f64 = power[1..power.len() - 1].iter().sum();
    Ok(h * (inner + 0.5 * (power[0] + power[power.len() - 1])))
}

/// `|g⟩⟨g| ⊗ D(α) + |e⟩⟨e| ⊗ I`.
pub fn conditional_displacement(alpha: C64, n_cav: usize) -> Result<Operator> {
    let d = displacement(alpha, n_cav)?;
    let mut gg = CMatrix::zeros(2, 2);
    gg[(0, 0)] = ONE;
    let mut ee = CMatrix::zeros(2, 2);
    ee[(1, 1)] = ONE;
    let q = HilbertSpace::qubit();
    let cav = HilbertSpace::cavity(n_cav)?;
    Ok(&Operator::new(q.clone(), gg)?.tensor(&d)
        + &Operator::new(q, ee)?.tensor(&Operator::identity(&cav)))
}

/// `X ⊗ |0⟩⟨0| + I ⊗ (I − |0⟩⟨0|)`.
pub fn conditional_flip(n_cav: usize) -> Result<Operator> {
    let cav = HilbertSpace::cavity(n_cav)?;
    let p0 = crate::quantum::fock_projector(0, n_cav)?;
    let rest = &Operator::identity(&cav) - &p0;
    Ok(&sigma_x().tensor(&p0) + &Operator::identity(&HilbertSpace::qubit()).tensor(&rest))
}

fn qubit_populations_excited(rho: &DensityMatrix) -> Result<f64> {
    Ok(partial_trace(rho, 0)?.populations()[1])
}

/// Per-block propagator for `H = Ω σ_y ⊗ |0⟩⟨0|` with qubit decay.
///
/// With the joint state split into 2×2 qubit blocks `ρ_mn` by cavity indices,
/// both the Hamiltonian and the dissipator act on each block separately, and
/// the block generator only depends on whether `m` and `n` are zero.
struct BlockPulse {
    n_cav: usize,
    /// `exp(L dt)` on column-stacked 2×2 blocks, indexed by `[m == 0][n == 0]`.
    props: [[DMatrix<C64>; 2]; 2],
}

impl BlockPulse {
    fn new(rabi: f64, gamma_a: f64, dt: f64, n_cav: usize) -> Self {
        let id = CMatrix::identity(2, 2);
        let sy = crate::quantum::sigma_y().into_matrix() * C64::new(rabi, 0.0);
        let zero = CMatrix::zeros(2, 2);
        let sm = crate::quantum::sigma_minus().into_matrix();
        let pe = crate::quantum::excited_projector().into_matrix();
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let dissipator = (sm.kronecker(&sm)) * C64::new(gamma_a, 0.0)
            - (id.kronecker(&pe) + pe.transpose().kronecker(&id)) * C64::new(0.5 * gamma_a, 0.0);
        let gen = |hm: &CMatrix, hn: &CMatrix| -> CMatrix {
            let l = id.kronecker(hm) * (-I) + hn.transpose().kronecker(&id) * I + &dissipator;
            (l * C64::new(dt, 0.0)).exp()
        };
        let props = [
            [gen(&zero, &zero), gen(&zero, &sy)],
            [gen(&sy, &zero), gen(&sy, &sy)],
        ];
        Self { n_cav, props }
    }

    fn step(&self, rho: &mut CMatrix) {
        let n = self.n_cav;
        for m in 0..n {
            for k in 0..n {
                let p = &self.props[(m == 0) as usize][(k == 0) as usize];
                // column-stacked block entries (g,g), (e,g), (g,e), (e,e)
                let v = [
                    rho[(m, k)],
                    rho[(n + m, k)],
                    rho[(m, n + k)],
                    rho[(n + m, n + k)],
                ];
                let mut out = [ZERO; 4];
                for (r, o) in out.iter_mut().enumerate() {
                    *o = p[(r, 0)] * v[0] + p[(r, 1)] * v[1] + p[(r, 2)] * v[2] + p[(r, 3)] * v[3];
                }
                rho[(m, k)] = out[0];
                rho[(n + m, k)] = out[1];
                rho[(m, n + k)] = out[2];
                rho[(n + m, n + k)] = out[3];
            }
        }
    }
}

fn qubit_moments(rho: &CMatrix, n_cav: usize) -> (f64, f64) {
    let mut sz = 0.0;
    let mut sx = 0.0;
    for m in 0..n_cav {
        sz += rho[(n_cav + m, n_cav + m)].re - rho[(m, m)].re;
        sx += 2.0 * rho[(n_cav + m, m)].re;
    }
    (sz, sx)
}

pub fn run_autonomous_demon(cfg: &AutonomousDemonConfig) -> Result<AutonomousResult> {
    cfg.validate()?;
    let n_cav = cfg.truncation();
    let space = HilbertSpace::qubit_cavity(n_cav)?;
    let rho_q0 = cfg.initial_qubit.state()?;
    let vacuum = PureState::fock(0, n_cav)?.to_density();
    let joint0 = rho_q0.tensor(&vacuum);
    let t_pi = cfg.pi_duration();

    let (joint_displaced, pulse_propagator) = match cfg.gate_model {
        GateModel::IdealGates => {
            let c_disp = conditional_displacement(cfg.alpha, n_cav)?;
            (joint0.conjugate_by(&c_disp)?, None)
        }
        GateModel::PulsedHamiltonian => {
            // cavity drive resonant with the |g⟩ branch, long against 1/χ
            let duration = 20.0 / cfg.chi;
            let drive = cfg.alpha.norm() / duration;
            let spec = HamiltonianSpec {
                chi: cfg.chi,
                cavity_detuning: -cfg.chi / 2.0,
                cavity_drive: drive,
                // −iT(εa† + ε*a) = αa† − α*a for ε = iα/T
                cavity_drive_phase: cfg.alpha.arg() + PI / 2.0,
                frame: Frame::CavityDrive,
                ..HamiltonianSpec::default()
            };
            let u_cav = build_driven_cavity(&spec, n_cav)?
                .scale(-I * duration)
                .exp();
            let rabi = cfg.chi / 20.0;
            let qspec = HamiltonianSpec {
                chi: cfg.chi,
                qubit_detuning: 0.0,
                qubit_drive: rabi,
                frame: Frame::QubitDrive,
                ..HamiltonianSpec::default()
            };
            let t_sel = PI / (2.0 * rabi);
            let dt = t_sel / cfg.pulse_steps as f64;
            let u_step = build_driven_qubit(&qspec, n_cav)?.scale(-I * dt).exp();
            (joint0.conjugate_by(&u_cav)?, Some((u_step, t_sel, rabi)))
        }
    };

    let mut pulse_sigma_z = Vec::with_capacity(cfg.pulse_steps + 1);
    let mut pulse_sigma_x = Vec::with_capacity(cfg.pulse_steps + 1);
    let (joint_final, work_direct, t_pulse) = match pulse_propagator {
        None => {
            let dt = t_pi / cfg.pulse_steps as f64;
            let pulse = BlockPulse::new(cfg.rabi, cfg.gamma_a, dt, n_cav);
            let mut rho = joint_displaced.matrix().clone();
            for step in 0..=cfg.pulse_steps {
                if step > 0 {
                    pulse.step(&mut rho);
                }
                let (sz, sx) = qubit_moments(&rho, n_cav);
                pulse_sigma_z.push(sz);
                pulse_sigma_x.push(sx);
            }
            let work = direct_work(
                &pulse_sigma_z,
                &pulse_sigma_x,
                cfg.gamma_a,
                2.0 * cfg.rabi,
                t_pi,
            )?;
            let final_state = if cfg.gamma_a > 0.0 {
                DensityMatrix::from_raw_normalized(space.clone(), rho)
            } else {
                joint_displaced.conjugate_by(&conditional_flip(n_cav)?)?
            };
            (final_state, work, t_pi)
        }
        Some((u_step, t_sel, rabi)) => {
            let mut rho = joint_displaced.clone();
            for step in 0..=cfg.pulse_steps {
                if step > 0 {
                    rho = rho.conjugate_by(&u_step)?;
                }
                let (sz, sx) = qubit_moments(rho.matrix(), n_cav);
                pulse_sigma_z.push(sz);
                pulse_sigma_x.push(sx);
            }
            let work = direct_work(&pulse_sigma_z, &pulse_sigma_x, 0.0, 2.0 * rabi, t_sel)?;
            (rho, work, t_sel)
        }
    };

    let rho_s = partial_trace(&joint_final, 0)?;
    let rho_d = partial_trace(&joint_final, 1)?;
    let p_initial = rho_q0.populations()[1];
    let final_excited = qubit_populations_excited(&joint_final)?;
    let entropies = Entropies {
        qubit_initial: von_neumann_entropy(&rho_q0)?,
        qubit: von_neumann_entropy(&rho_s)?,
        cavity: von_neumann_entropy(&rho_d)?,
        joint: von_neumann_entropy(&joint_final)?,
    };
    Ok(AutonomousResult {
        rho_s,
        rho_d,
        joint_displaced,
        joint_final,
        work_direct,
        delta_u: p_initial - final_excited,
        entropies,
        final_excited,
        pulse_sigma_z,
        pulse_sigma_x,
        t_pi: t_pulse,
    })
}
