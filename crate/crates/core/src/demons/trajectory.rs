//! Feedback after continuous weak monitoring of a Rabi-driven qubit.
//!
//! Per trial: projective outcome `z` of a thermal qubit; the qubit is driven
//! and monitored for `t_m`, producing a record `dV(t)`; the demon filters the
//! same record starting from its prior `ρ_0` (it does not know `z`) and ends
//! with `ρ_tm = p_1|ψ⟩⟨ψ| + p_0|ψ⊥⟩⟨ψ⊥|`; it rotates the least likely
//! eigenvector onto `|e⟩`; a final projective measurement gives `z′`.
//!
//! Work is the TPM energy difference `E_z − E_z′`, information is
//! `ln p_tm(z′) − ln p_0(z)` with `p_tm` the eigenvalues of `ρ_tm`.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_beta, check_trials, stochastic_information, Level, TPMRecord};
use crate::dynamics::{
    driven_qubit_hamiltonian, qubit_energy, step_count, LindbladChannel, SmeConfig, SmeIntegrator,
};
use crate::error::{invalid, Error, Result};
use crate::parallel::{map_trials, trial_rng, Execution};
use crate::quantum::{
    hermitian_eigen, trace_of_product, CMatrix, DensityMatrix, HilbertSpace, Operator, I, ONE,
};
use crate::thermo::{
    average_information, exp_average_with, thermal_excited_population, EstimatorResult,
};

/// Eigenvalue gap below which the feedback rotation is the identity.
pub const DEGENERACY_TOL: f64 = 1e-12;

pub(crate) fn basis_state(level: Level) -> DensityMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(level.index(), level.index())] = ONE;
    DensityMatrix::from_raw(HilbertSpace::qubit(), m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryDemonConfig {
    pub beta_homega: f64,
    /// Time step, efficiency and measurement rate (its seed is unused; trials
    /// draw from `seed`).
    pub sme: SmeConfig,
    /// Coefficient of `σ_y` during monitoring.
    pub rabi: f64,
    /// Qubit decay rate during monitoring.
    pub decay_rate: f64,
    pub t_m: f64,
    pub trials: usize,
    pub seed: u64,
    /// Prior state; `None` means the thermal state at `beta_homega`. Must be
    /// diagonal in the energy basis.
    pub initial_state: Option<DensityMatrix>,
    /// Whether the first projective measurement is performed. Without it the
    /// qubit starts in the prior itself and `z` is drawn for bookkeeping only.
    pub first_tpm: bool,
}

impl TrajectoryDemonConfig {
    pub fn new(
        beta_homega: f64,
        sme: SmeConfig,
        rabi: f64,
        t_m: f64,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            beta_homega,
            sme,
            rabi,
            decay_rate: 0.0,
            t_m,
            trials,
            seed,
            initial_state: None,
            first_tpm: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta_homega)?;
        self.sme.validate()?;
        check_trials(self.trials)?;
        if !self.rabi.is_finite() {
            return Err(invalid("rabi", format!("{} must be finite", self.rabi)));
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return Err(invalid(
                "decay_rate",
                format!("{} must be finite and >= 0", self.decay_rate),
            ));
        }
        step_count(self.t_m, self.sme.dt)?;
        if let Some(rho) = &self.initial_state {
            if rho.space().dims() != [2] {
                return Err(invalid("initial_state", "must be a single-qubit state"));
            }
            if rho.matrix()[(0, 1)].norm() > 1e-12 {
                return Err(invalid(
                    "initial_state",
                    "must be diagonal in the energy basis",
                ));
            }
        }
        Ok(())
    }

    pub fn prior(&self) -> Result<DensityMatrix> {
        match &self.initial_state {
            Some(rho) => Ok(rho.clone()),
            None => DensityMatrix::thermal_qubit(thermal_excited_population(self.beta_homega)),
        }
    }
}

/// Feedback rotation `U = |e⟩⟨v_min| + |g⟩⟨v_max|` for the demon state, and
/// the resulting final populations `[λ_max, λ_min]` indexed by level.
pub fn optimal_feedback_rotation(rho_tm: &DensityMatrix) -> Result<(Operator, [f64; 2])> {
    if rho_tm.space().dims() != [2] {
        return Err(Error::InvalidSpace(
            "feedback rotation acts on a single qubit".into(),
        ));
    }
    let (values, vectors) = hermitian_eigen(rho_tm.matrix());
    let (lo, hi) = (values[0].clamp(0.0, 1.0), values[1].clamp(0.0, 1.0));
    if hi - lo <= DEGENERACY_TOL {
        let half = 0.5 * (lo + hi);
        return Ok((Operator::identity(&HilbertSpace::qubit()), [half, half]));
    }
    let u = CMatrix::from_fn(2, 2, |r, c| {
        let col = if r == 1 { 0 } else { 1 };
        vectors[(c, col)].conj()
    });
    Ok((Operator::new(HilbertSpace::qubit(), u)?, [hi, lo]))
}

/// `ln p_tm(z′) − ln p_0(z)`; `None` flags a zero-probability outcome.
pub fn i_qc_trajectory(p0_of_z: f64, ptm_of_zprime: f64) -> Result<Option<f64>> {
    stochastic_information(ptm_of_zprime, p0_of_z)
}

/// Result of one monitored trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryTrial {
    pub tpm: TPMRecord,
    /// Prior populations `p_0(z)`.
    pub p0: [f64; 2],
    /// Demon's final populations `p_tm(z′)` after its rotation.
    pub ptm: [f64; 2],
    /// Demon's filtered state at `t_m`.
    pub filtered: DensityMatrix,
    /// `Σ_{z,z′} p_0(z) p_tm(z′) I(z, z′)` for this record.
    pub record_information: f64,
    /// Energy removed by the drive during monitoring (units of `ω_q`).
    pub drive_work: f64,
}

/// Record-averaged information by direct summation over outcome pairs.
pub fn record_information(p0: &[f64; 2], ptm: &[f64; 2]) -> Result<f64> {
    let mut total = 0.0;
    for &pz in p0 {
        for &pz2 in ptm {
            if pz > 0.0 && pz2 > 0.0 {
                total += pz * pz2 * i_qc_trajectory(pz, pz2)?.expect("positive probabilities");
            }
        }
    }
    Ok(total)
}

pub fn run_trajectory_demon(cfg: &TrajectoryDemonConfig) -> Result<Vec<TrajectoryTrial>> {
    run_trajectory_demon_with(cfg, Execution::default())
}

pub fn run_trajectory_demon_with(
    cfg: &TrajectoryDemonConfig,
    exec: Execution,
) -> Result<Vec<TrajectoryTrial>> {
    cfg.validate()?;
    let steps = step_count(cfg.t_m, cfg.sme.dt)?;
    let h = driven_qubit_hamiltonian(0.0, cfg.rabi);
    let space = HilbertSpace::qubit();
    let extra = if cfg.decay_rate > 0.0 {
        vec![LindbladChannel::qubit_decay(cfg.decay_rate, &space)?]
    } else {
        Vec::new()
    };
    let integ = SmeIntegrator::new(&h, cfg.sme, &extra)?;
    let prior = cfg.prior()?;
    let p0 = [prior.populations()[0], prior.populations()[1]];
    let energy = qubit_energy(&space)?;
    let work_op = (energy.matrix() * h.matrix() - h.matrix() * energy.matrix()) * I;

    let trial = |n: usize| -> Result<TrajectoryTrial> {
        let mut rng = trial_rng(cfg.seed, n as u64);
        let z = if rng.random::<f64>() < p0[1] {
            Level::Excited
        } else {
            Level::Ground
        };
        let mut physical = if cfg.first_tpm {
            basis_state(z)
        } else {
            prior.clone()
        };
        let mut demon = prior.clone();
        let sqrt_dt = cfg.sme.dt.sqrt();
        let mut drive_work = 0.0;
        for step in 0..steps {
            drive_work += cfg.sme.dt * trace_of_product(physical.matrix(), &work_op).re;
            let noise: f64 = rng.sample(StandardNormal);
            let (next, dv, _) = integ.step(&physical, noise * sqrt_dt);
            integ.check_positive(&next, step + 1)?;
            let (next_demon, _) = integ.filter(&demon, dv);
            integ.check_positive(&next_demon, step + 1)?;
            physical = next;
            demon = next_demon;
        }
        let (u, ptm) = optimal_feedback_rotation(&demon)?;
        let rotated = physical.conjugate_by(&u)?;
        let p_excited = rotated.populations()[1].clamp(0.0, 1.0);
        let z_final = if rng.random::<f64>() < p_excited {
            Level::Excited
        } else {
            Level::Ground
        };
        let info = i_qc_trajectory(p0[z.index()], ptm[z_final.index()])?;
        Ok(TrajectoryTrial {
            tpm: TPMRecord::new(z, z_final, info),
            p0,
            ptm,
            record_information: record_information(&p0, &ptm)?,
            filtered: demon,
            drive_work,
        })
    };
    let results = map_trials(cfg.trials, exec, |n| {
        trial(n).map_err(|e| e.in_trial(n, cfg.seed))
    });
    results.into_iter().collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryEstimates {
    /// `⟨e^{βW − I}⟩` over reversible trials.
    pub generalized: EstimatorResult,
    /// `⟨e^{βW}⟩`.
    pub plain: EstimatorResult,
    /// Mean stochastic information `⟨I⟩`.
    pub information: EstimatorResult,
    /// Mean of the record-averaged information `S(ρ_0) − S(ρ_tm)`.
    pub record_information: EstimatorResult,
    pub irreversible_trials: usize,
}

pub fn jarzynski_trajectory(
    trials: &[TrajectoryTrial],
    beta_homega: f64,
    seed: u64,
) -> Result<TrajectoryEstimates> {
    if trials.is_empty() {
        return Err(Error::EmptySamples);
    }
    let reversible: Vec<(f64, f64)> = trials
        .iter()
        .filter_map(|t| t.tpm.information.map(|i| (t.tpm.work, i)))
        .collect();
    let generalized: Vec<f64> = reversible
        .iter()
        .map(|(w, i)| beta_homega * w - i)
        .collect();
    let info: Vec<f64> = reversible.iter().map(|(_, i)| *i).collect();
    let plain: Vec<f64> = trials.iter().map(|t| beta_homega * t.tpm.work).collect();
    let rec_info: Vec<f64> = trials.iter().map(|t| t.record_information).collect();
    let exec = Execution::default();
    Ok(TrajectoryEstimates {
        generalized: exp_average_with(&generalized, seed ^ 0x9e37_79b9, exec)?,
        plain: exp_average_with(&plain, seed ^ 0x7f4a_7c15, exec)?,
        information: average_information(&info)?,
        record_information: average_information(&rec_info)?,
        irreversible_trials: trials.len() - reversible.len(),
    })
}
