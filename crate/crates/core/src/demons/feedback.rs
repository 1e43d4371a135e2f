//! Discrete measurement-and-feedback demon.
//!
//! Each trial: thermal qubit, projective TPM outcome `i`, weak Gaussian readout
//! giving `k`, optional relaxation, projective check `y`, a π-pulse if
//! `k = e`, optional relaxation, final TPM outcome `f`. The readout records
//! `V ~ N(±s/2, 1)` (excited positive) and clicks `k = e` when `V > threshold`.
//!
//! Relaxation over a stage is the generalized amplitude-damping map toward the
//! bath population: with probability `1 − e^{−t/T_1}` the qubit is replaced by
//! a thermal one.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{check_beta, check_trials, stochastic_information, Level, TPMRecord};
use crate::error::{invalid, Error, Result};
use crate::parallel::{map_trials, trial_rng, Execution};
use crate::quantum::{CMatrix, DensityMatrix, C64};
use crate::thermo::{
    average_information, exp_average_with, thermal_excited_population, EstimatorResult,
};

/// Gaussian readout with signal-to-noise `strength` (distance between the two
/// conditional means in units of the noise width). `strength = ∞` is a
/// projective measurement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianMeasurementModel {
    pub strength: f64,
    pub threshold: f64,
}

impl Default for GaussianMeasurementModel {
    fn default() -> Self {
        Self {
            strength: 2.0,
            threshold: 0.0,
        }
    }
}

impl GaussianMeasurementModel {
    pub fn new(strength: f64, threshold: f64) -> Result<Self> {
        let m = Self {
            strength,
            threshold,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn projective() -> Self {
        Self {
            strength: f64::INFINITY,
            threshold: 0.0,
        }
    }

    /// Strength giving the same information as continuous monitoring with
    /// `ηΓ_m t_m` (`s²/4 = ηΓ_m t_m`).
    pub fn from_monitoring(eta: f64, gamma_m: f64, t_m: f64) -> Result<Self> {
        Self::new(2.0 * (eta * gamma_m * t_m).sqrt(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strength.is_nan() || self.strength < 0.0 {
            return Err(invalid(
                "strength",
                format!("{} must be >= 0", self.strength),
            ));
        }
        if !self.threshold.is_finite() {
            return Err(invalid(
                "threshold",
                format!("{} must be finite", self.threshold),
            ));
        }
        Ok(())
    }

    pub fn is_projective(&self) -> bool {
        self.strength.is_infinite()
    }

    /// Mean record for a qubit in `level`.
    pub fn mean(&self, level: Level) -> f64 {
        match level {
            Level::Ground => -0.5 * self.strength,
            Level::Excited => 0.5 * self.strength,
        }
    }

    /// `P(k = e | level)`.
    pub fn click_probability(&self, level: Level) -> f64 {
        if self.is_projective() {
            return if level == Level::Excited { 1.0 } else { 0.0 };
        }
        // P(V > θ) for V ~ N(μ, 1)
        0.5 * libm::erfc((self.threshold - self.mean(level)) / std::f64::consts::SQRT_2)
    }

    pub fn outcome_probability(&self, level: Level, k: Level) -> f64 {
        let p = self.click_probability(level);
        match k {
            Level::Excited => p,
            Level::Ground => 1.0 - p,
        }
    }

    pub fn decide(&self, record: f64) -> Level {
        if record > self.threshold {
            Level::Excited
        } else {
            Level::Ground
        }
    }
}

/// Outcome of [`weak_measure`].
#[derive(Clone, Debug, PartialEq)]
pub struct WeakOutcome {
    pub outcome: Level,
    pub posterior: DensityMatrix,
    /// Readout value; `±∞` for a projective model.
    pub record: f64,
}

fn check_qubit(state: &DensityMatrix) -> Result<()> {
    if state.space().dims() != [2] {
        return Err(Error::InvalidSpace(format!(
            "readout acts on a single qubit, got dims {:?}",
            state.space().dims()
        )));
    }
    Ok(())
}

/// Bayesian update of `state` for a given readout value. The Kraus operator
/// is diagonal with entries `∝ exp(−(V ∓ s/2)²/4)`.
pub fn weak_update(
    state: &DensityMatrix,
    model: &GaussianMeasurementModel,
    record: f64,
) -> Result<(Level, DensityMatrix)> {
    check_qubit(state)?;
    model.validate()?;
    if model.is_projective() {
        let level = if record > 0.0 {
            Level::Excited
        } else {
            Level::Ground
        };
        let post = super::trajectory::basis_state(level);
        return Ok((level, post));
    }
    let log_g = -(record - model.mean(Level::Ground)).powi(2) / 4.0;
    let log_e = -(record - model.mean(Level::Excited)).powi(2) / 4.0;
    let top = log_g.max(log_e);
    let kraus = [(log_g - top).exp(), (log_e - top).exp()];
    let rho = state.matrix();
    let updated = CMatrix::from_fn(2, 2, |r, c| {
        rho[(r, c)] * C64::new(kraus[r] * kraus[c], 0.0)
    });
    let tr = updated[(0, 0)].re + updated[(1, 1)].re;
    if !(tr > 0.0) {
        return Err(Error::InvalidTrace(tr));
    }
    let posterior = DensityMatrix::new(state.space().clone(), updated / C64::new(tr, 0.0))?;
    Ok((model.decide(record), posterior))
}

/// Sample a readout of `state` and return the decision, posterior, and record.
pub fn weak_measure<R: Rng + ?Sized>(
    state: &DensityMatrix,
    model: &GaussianMeasurementModel,
    rng: &mut R,
) -> Result<WeakOutcome> {
    check_qubit(state)?;
    model.validate()?;
    let p_e = state.populations()[1];
    let branch = if rng.random::<f64>() < p_e {
        Level::Excited
    } else {
        Level::Ground
    };
    let record = if model.is_projective() {
        match branch {
            Level::Excited => f64::INFINITY,
            Level::Ground => f64::NEG_INFINITY,
        }
    } else {
        let noise: f64 = rng.sample(StandardNormal);
        model.mean(branch) + noise
    };
    let (outcome, posterior) = weak_update(state, model, record)?;
    // a projective readout reports the branch regardless of threshold
    let outcome = if model.is_projective() {
        branch
    } else {
        outcome
    };
    Ok(WeakOutcome {
        outcome,
        posterior,
        record,
    })
}

/// `ln p(y|k) − ln p(i)`; `None` marks an absolutely irreversible trial.
pub fn i_qc_discrete(p_i: f64, p_y_given_k: f64) -> Result<Option<f64>> {
    stochastic_information(p_y_given_k, p_i)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackDemonConfig {
    pub beta_homega: f64,
    pub model: GaussianMeasurementModel,
    /// Duration of each relaxation stage over `T_1`; 0 disables relaxation.
    pub t1_ratio: f64,
    pub trials: usize,
    pub seed: u64,
    /// When false the demon ignores `k` and never flips the qubit.
    pub feedback: bool,
}

impl Default for FeedbackDemonConfig {
    fn default() -> Self {
        Self {
            beta_homega: 9f64.ln(),
            model: GaussianMeasurementModel::default(),
            t1_ratio: 0.01,
            trials: 100_000,
            seed: 0,
            feedback: true,
        }
    }
}

impl FeedbackDemonConfig {
    pub fn validate(&self) -> Result<()> {
        check_beta(self.beta_homega)?;
        self.model.validate()?;
        if !(self.t1_ratio >= 0.0 && self.t1_ratio.is_finite()) {
            return Err(invalid(
                "t1_ratio",
                format!("{} must be finite and >= 0", self.t1_ratio),
            ));
        }
        check_trials(self.trials)
    }
}

/// Exact outcome probabilities of the feedback protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackAnalysis {
    /// Bath (and initial) excited population.
    pub p_e: f64,
    /// Probability that a relaxation stage resets the qubit.
    pub relax: f64,
    /// `p(k, y)` indexed `[k][y]`.
    pub joint_ky: [[f64; 2]; 2],
    /// `p(k)`.
    pub p_k: [f64; 2],
    /// `p(y | k)` indexed `[k][y]`; zero rows where `p(k) = 0`.
    pub p_y_given_k: [[f64; 2]; 2],
    pub feedback: bool,
}

impl FeedbackAnalysis {
    pub fn new(cfg: &FeedbackDemonConfig) -> Result<Self> {
        cfg.validate()?;
        let p_e = thermal_excited_population(cfg.beta_homega);
        let relax = 1.0 - (-cfg.t1_ratio).exp();
        let prior = [1.0 - p_e, p_e];
        let mut joint = [[0.0; 2]; 2];
        for (i, &p_i) in prior.iter().enumerate() {
            let li = Level::from_index(i);
            for (k, row) in joint.iter_mut().enumerate() {
                let p_k = cfg.model.outcome_probability(li, Level::from_index(k));
                for (y, cell) in row.iter_mut().enumerate() {
                    let stay = if y == i { 1.0 - relax } else { 0.0 };
                    *cell += p_i * p_k * (stay + relax * prior[y]);
                }
            }
        }
        let p_k = [joint[0][0] + joint[0][1], joint[1][0] + joint[1][1]];
        let mut p_y_given_k = [[0.0; 2]; 2];
        for k in 0..2 {
            if p_k[k] > 0.0 {
                for y in 0..2 {
                    p_y_given_k[k][y] = joint[k][y] / p_k[k];
                }
            }
        }
        Ok(Self {
            p_e,
            relax,
            joint_ky: joint,
            p_k,
            p_y_given_k,
            feedback: cfg.feedback,
        })
    }

    pub fn prior(&self, level: Level) -> f64 {
        match level {
            Level::Ground => 1.0 - self.p_e,
            Level::Excited => self.p_e,
        }
    }

    pub fn p_y_given_k(&self, k: Level, y: Level) -> f64 {
        self.p_y_given_k[k.index()][y.index()]
    }

    /// Level after the feedback stage.
    pub fn after_feedback(&self, k: Level, y: Level) -> Level {
        if self.feedback && k == Level::Excited {
            y.flipped()
        } else {
            y
        }
    }

    /// Probability mass of backward events whose forward counterpart is
    /// impossible: readout pairs `(k, y)` with `p(k) > 0` and `p(y|k) = 0`,
    /// weighted by `p(k)` and the thermal probability of the state the
    /// feedback would have produced.
    pub fn lambda_fb(&self) -> f64 {
        let mut lambda = 0.0;
        for k in [Level::Ground, Level::Excited] {
            if self.p_k[k.index()] <= 0.0 {
                continue;
            }
            for y in [Level::Ground, Level::Excited] {
                if self.p_y_given_k(k, y) == 0.0 {
                    lambda += self.p_k[k.index()] * self.prior(self.after_feedback(k, y));
                }
            }
        }
        lambda
    }

    /// Feedback error `p(y=e, k=g) + p(y=g, k=e)`.
    pub fn feedback_error(&self) -> f64 {
        self.joint_ky[0][1] + self.joint_ky[1][0]
    }
}

fn relax_stage<R: Rng + ?Sized>(level: Level, analysis: &FeedbackAnalysis, rng: &mut R) -> Level {
    if analysis.relax > 0.0 && rng.random::<f64>() < analysis.relax {
        if rng.random::<f64>() < analysis.p_e {
            Level::Excited
        } else {
            Level::Ground
        }
    } else {
        level
    }
}

/// Run the protocol. Trial `n` uses stream `n` of `cfg.seed`.
pub fn run_feedback_demon(cfg: &FeedbackDemonConfig) -> Result<Vec<TPMRecord>> {
    run_feedback_demon_with(cfg, Execution::default())
}

pub fn run_feedback_demon_with(
    cfg: &FeedbackDemonConfig,
    exec: Execution,
) -> Result<Vec<TPMRecord>> {
    let analysis = FeedbackAnalysis::new(cfg)?;
    let ground = super::trajectory::basis_state(Level::Ground);
    let excited = super::trajectory::basis_state(Level::Excited);
    let records = map_trials(cfg.trials, exec, |n| -> Result<TPMRecord> {
        let mut rng = trial_rng(cfg.seed, n as u64);
        let i = if rng.random::<f64>() < analysis.p_e {
            Level::Excited
        } else {
            Level::Ground
        };
        let state = if i == Level::Excited {
            &excited
        } else {
            &ground
        };
        let readout = weak_measure(state, &cfg.model, &mut rng)?;
        let k = readout.outcome;
        let y = relax_stage(i, &analysis, &mut rng);
        let f = relax_stage(analysis.after_feedback(k, y), &analysis, &mut rng);
        let info = i_qc_discrete(analysis.prior(i), analysis.p_y_given_k(k, y))?;
        let mut rec = TPMRecord::new(i, f, info);
        rec.demon = Some(k);
        rec.post = Some(y);
        rec.record = readout.record.is_finite().then_some(readout.record);
        Ok(rec)
    });
    records.into_iter().collect()
}

/// Ensemble estimates for the feedback protocol.
#[derive(Clone, Debug, PartialEq)]
pub struct FeedbackEstimates {
    /// `⟨e^{βW − I}⟩` over reversible trials.
    pub generalized: EstimatorResult,
    /// `⟨e^{βW}⟩` over all trials.
    pub plain: EstimatorResult,
    /// `⟨I⟩` over reversible trials.
    pub information: EstimatorResult,
    pub lambda_fb: f64,
    pub feedback_error: f64,
    pub irreversible_trials: usize,
}

pub fn jarzynski_feedback(
    records: &[TPMRecord],
    cfg: &FeedbackDemonConfig,
) -> Result<FeedbackEstimates> {
    if records.is_empty() {
        return Err(Error::EmptySamples);
    }
    let analysis = FeedbackAnalysis::new(cfg)?;
    let beta = cfg.beta_homega;
    let reversible: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| r.information.map(|info| (r.work, info)))
        .collect();
    let generalized_x: Vec<f64> = reversible.iter().map(|(w, i)| beta * w - i).collect();
    let info: Vec<f64> = reversible.iter().map(|(_, i)| *i).collect();
    let plain_x: Vec<f64> = records.iter().map(|r| beta * r.work).collect();
    let exec = Execution::default();
    Ok(FeedbackEstimates {
        generalized: exp_average_with(&generalized_x, cfg.seed ^ 0x9e37_79b9, exec)?,
        plain: exp_average_with(&plain_x, cfg.seed ^ 0x7f4a_7c15, exec)?,
        information: average_information(&info)?,
        lambda_fb: analysis.lambda_fb(),
        feedback_error: analysis.feedback_error(),
        irreversible_trials: records.len() - reversible.len(),
    })
}
