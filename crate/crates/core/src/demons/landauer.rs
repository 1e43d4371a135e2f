//! Work extraction from one bit with a tunable qubit frequency.
//!
//! Stage 1: a qubit thermalized at `ω_1` is measured and flipped to `|g⟩`
//! when found excited, extracting `ω_1 p_e(ω_1)` on average. Stage 2: the
//! frequency is raised to `ω_2` with the qubit in `|g⟩`, at no cost. Stage 3:
//! the frequency is lowered back to `ω_1` quasi-statically while in contact
//! with the bath, the qubit re-thermalizing after every small step.
//!
//! All work values are in units of `k_B T`; frequencies enter as `βħω`.

use crate::error::{invalid, Result};
use crate::thermo::{binary_entropy, thermal_excited_population};

/// Largest allowed change of `βħω` per quasi-static step.
pub const MAX_RAMP_INCREMENT: f64 = 1e-2;

/// Fraction of `k_B T ln 2` extracted by the fixed-frequency stage:
/// `x / (ln 2 · (1 + e^x))` for `x = βħω`.
pub fn landauer_ratio(beta_homega: f64) -> Result<f64> {
    if !(beta_homega > 0.0) || beta_homega.is_nan() {
        return Err(invalid("beta_homega", format!("{beta_homega} must be > 0")));
    }
    Ok(beta_homega * thermal_excited_population(beta_homega) / std::f64::consts::LN_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauerConfig {
    /// `βħω_1`.
    pub beta_homega1: f64,
    /// `ω_2 / ω_1`.
    pub omega2_ratio: f64,
    /// Number of quasi-static steps from `ω_2` down to `ω_1`.
    pub ramp_steps: usize,
}

impl Default for LandauerConfig {
    fn default() -> Self {
        Self {
            beta_homega1: 1.279,
            omega2_ratio: 50.0,
            ramp_steps: 100_000,
        }
    }
}

impl LandauerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta_homega1 > 0.0 && self.beta_homega1.is_finite()) {
            return Err(invalid(
                "beta_homega1",
                format!("{} must be finite and > 0", self.beta_homega1),
            ));
        }
        if !(self.omega2_ratio > 1.0 && self.omega2_ratio.is_finite()) {
            return Err(invalid(
                "omega2_ratio",
                format!("{} must be finite and > 1", self.omega2_ratio),
            ));
        }
        if self.ramp_steps == 0 {
            return Err(invalid("ramp_steps", "must be >= 1"));
        }
        let increment = self.ramp_increment();
        if increment >= MAX_RAMP_INCREMENT {
            return Err(invalid(
                "ramp_steps",
                format!(
                    "step in βħω is {increment:.3e}; need < {MAX_RAMP_INCREMENT:e}, i.e. more than {} steps",
                    (self.beta_homega1 * (self.omega2_ratio - 1.0) / MAX_RAMP_INCREMENT).ceil()
                ),
            ));
        }
        Ok(())
    }

    fn ramp_increment(&self) -> f64 {
        self.beta_homega1 * (self.omega2_ratio - 1.0) / self.ramp_steps as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LandauerResult {
    /// Stage-1 work `βħω_1 p_e(ω_1)`.
    pub stage1: f64,
    /// Stage-3 work from the discrete quasi-static ramp.
    pub stage3: f64,
    /// Stage-3 work in the continuum limit,
    /// `ln[(1 + e^{−βħω_1}) / (1 + e^{−βħω_2})]`.
    pub stage3_reversible: f64,
    pub total: f64,
    /// `total / ln 2`.
    pub ratio: f64,
    /// Shannon entropy (nats) of the stage-1 measurement outcome.
    pub acquired_information: f64,
    /// `total / acquired_information`.
    pub information_ratio: f64,
}

/// Run the three-stage protocol. Each ramp step first lowers the frequency at
/// fixed populations (extracting `p_e Δ(βħω)`) and then re-thermalizes; the
/// ramp starts from `|g⟩` at `ω_2`.
pub fn run_landauer_protocol(cfg: &LandauerConfig) -> Result<LandauerResult> {
    cfg.validate()?;
    let x1 = cfg.beta_homega1;
    let x2 = x1 * cfg.omega2_ratio;
    let dx = cfg.ramp_increment();
    let p1 = thermal_excited_population(x1);
    let stage1 = x1 * p1;

    let mut stage3 = 0.0;
    let mut population = 0.0;
    for k in 0..cfg.ramp_steps {
        stage3 += population * dx;
        let x = x2 - (k + 1) as f64 * dx;
        population = thermal_excited_population(x);
    }
    let stage3_reversible = ((1.0 + (-x1).exp()) / (1.0 + (-x2).exp())).ln();
    let total = stage1 + stage3;
    let acquired_information = binary_entropy(p1);
    Ok(LandauerResult {
        stage1,
        stage3,
        stage3_reversible,
        total,
        ratio: total / std::f64::consts::LN_2,
        acquired_information,
        information_ratio: total / acquired_information,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ratio_examples() {
        assert_abs_diff_eq!(landauer_ratio(2.0).unwrap(), 0.343947, epsilon = 1e-6);
        assert!(landauer_ratio(1e-9).unwrap() < 1e-8);
        assert!(landauer_ratio(0.0).is_err());
    }

    #[test]
    fn stage1_alone_matches_ratio() {
        let r = run_landauer_protocol(&LandauerConfig::default()).unwrap();
        assert_abs_diff_eq!(
            r.stage1 / std::f64::consts::LN_2,
            landauer_ratio(1.279).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn coarse_ramp_rejected() {
        let cfg = LandauerConfig {
            ramp_steps: 100,
            ..LandauerConfig::default()
        };
        assert!(run_landauer_protocol(&cfg).is_err());
        assert!(LandauerConfig {
            omega2_ratio: 1.0,
            ..LandauerConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn total_equals_acquired_information_in_the_limit() {
        let r = run_landauer_protocol(&LandauerConfig::default()).unwrap();
        assert_abs_diff_eq!(r.information_ratio, 1.0, epsilon = 1e-3);
    }
}
