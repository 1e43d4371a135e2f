//! Maxwell's demon protocols: measurement-and-feedback with a weak readout,
//! feedback after continuous monitoring, the autonomous qubit-cavity demon,
//! and the tunable-frequency Landauer protocol.
//!
//! Energies are in units of `ω_q` with `|g⟩` at `−1/2` and `|e⟩` at `+1/2`;
//! work is *extracted* work, `E_initial − E_final`.

pub mod autonomous;
pub mod feedback;
pub mod landauer;
pub mod trajectory;

pub use autonomous::{
    direct_work, run_autonomous_demon, AutonomousDemonConfig, AutonomousResult, GateModel,
    QubitInit,
};
pub use feedback::{
    i_qc_discrete, jarzynski_feedback, run_feedback_demon, run_feedback_demon_with, weak_measure,
    FeedbackAnalysis, FeedbackDemonConfig, FeedbackEstimates, GaussianMeasurementModel,
    WeakOutcome,
};
pub use landauer::{landauer_ratio, run_landauer_protocol, LandauerConfig, LandauerResult};
pub use trajectory::{
    i_qc_trajectory, jarzynski_trajectory, optimal_feedback_rotation, run_trajectory_demon,
    run_trajectory_demon_with, TrajectoryDemonConfig, TrajectoryEstimates, TrajectoryTrial,
};

use crate::error::{Error, Result};

/// Qubit energy level, basis index 0 for `|g⟩` and 1 for `|e⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    Ground,
    Excited,
}

impl Level {
    pub fn index(self) -> usize {
        match self {
            Level::Ground => 0,
            Level::Excited => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Level::Ground
        } else {
            Level::Excited
        }
    }

    /// Energy in units of `ω_q`.
    pub fn energy(self) -> f64 {
        match self {
            Level::Ground => -0.5,
            Level::Excited => 0.5,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Level::Ground => Level::Excited,
            Level::Excited => Level::Ground,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Level::Ground => "g",
            Level::Excited => "e",
        }
    }
}

/// One two-point-measurement trial.
#[derive(Clone, Debug, PartialEq)]
pub struct TPMRecord {
    /// First projective outcome (`i` or `z`).
    pub initial: Level,
    /// Demon's readout outcome `k`, if the protocol has one.
    pub demon: Option<Level>,
    /// Projective outcome `y` right after the readout, if any.
    pub post: Option<Level>,
    /// Final projective outcome (`f` or `z′`).
    pub final_level: Level,
    pub energy_initial: f64,
    pub energy_final: f64,
    /// Extracted work `E_initial − E_final` (units of `ω_q`).
    pub work: f64,
    /// Stochastic mutual information (nats); `None` flags an absolutely
    /// irreversible trial.
    pub information: Option<f64>,
    /// Raw readout value `V`, when finite.
    pub record: Option<f64>,
}

impl TPMRecord {
    pub(crate) fn new(initial: Level, final_level: Level, information: Option<f64>) -> Self {
        Self {
            initial,
            demon: None,
            post: None,
            final_level,
            energy_initial: initial.energy(),
            energy_final: final_level.energy(),
            work: initial.energy() - final_level.energy(),
            information,
            record: None,
        }
    }

    pub fn is_irreversible(&self) -> bool {
        self.information.is_none()
    }
}

/// `ln p_post − ln p_prior`, `None` when either probability is zero.
pub(crate) fn stochastic_information(p_post: f64, p_prior: f64) -> Result<Option<f64>> {
    for (name, p) in [
        ("posterior probability", p_post),
        ("prior probability", p_prior),
    ] {
        if !(0.0..=1.0 + 1e-12).contains(&p) || p.is_nan() {
            return Err(Error::InvalidParameter {
                name: "probability",
                reason: format!("{name} {p} outside [0, 1]"),
            });
        }
    }
    if p_post <= 0.0 || p_prior <= 0.0 {
        return Ok(None);
    }
    Ok(Some(p_post.ln() - p_prior.ln()))
}

pub(crate) fn check_beta(beta_homega: f64) -> Result<()> {
    if !(beta_homega > 0.0 && beta_homega.is_finite()) {
        return Err(crate::error::invalid(
            "beta_homega",
            format!("{beta_homega} must be finite and > 0"),
        ));
    }
    Ok(())
}

pub(crate) fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(crate::error::invalid("trials", "must be >= 1"));
    }
    Ok(())
}
