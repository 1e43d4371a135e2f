//! Scenario files: protocol choice, parameters with defaults, optional sweep.

use std::path::PathBuf;

use qdemon_core::demons::{
    AutonomousDemonConfig, FeedbackDemonConfig, GateModel, GaussianMeasurementModel,
    LandauerConfig, QubitInit, TrajectoryDemonConfig,
};
use qdemon_core::dynamics::{SmeConfig, SmeScheme};
use qdemon_core::quantum::{DensityMatrix, C64};
use qdemon_core::thermo::beta_homega_from_population;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    FeedbackDemon,
    TrajectoryDemon,
    AutonomousDemon,
    Landauer,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::FeedbackDemon => "feedback-demon",
            Protocol::TrajectoryDemon => "trajectory-demon",
            Protocol::AutonomousDemon => "autonomous-demon",
            Protocol::Landauer => "landauer",
        }
    }

    pub fn is_stochastic(self) -> bool {
        matches!(self, Protocol::FeedbackDemon | Protocol::TrajectoryDemon)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    protocol: Protocol,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    parameters: Map<String, Value>,
    #[serde(default)]
    sweep: Option<Sweep>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
}

/// A parsed scenario with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scenario {
    pub protocol: Protocol,
    pub name: String,
    pub seed: Option<u64>,
    pub parameters: Map<String, Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// One point of a (possibly trivial) sweep.
#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub value: Option<Value>,
    pub params: ProtocolParams,
}

impl Scenario {
    pub fn from_json(text: &str, overrides: Overrides) -> Result<Self, CliError> {
        let raw: RawScenario =
            serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut parameters = raw.parameters;
        if let Some(trials) = overrides.trials {
            if !raw.protocol.is_stochastic() {
                return Err(CliError::Config(format!(
                    "--trials does not apply to the deterministic protocol {}",
                    raw.protocol.as_str()
                )));
            }
            parameters.insert("trials".into(), Value::from(trials));
        }
        let seed = overrides.seed.or(raw.seed);
        if raw.protocol.is_stochastic() && seed.is_none() {
            return Err(CliError::Config(format!(
                "seed: required for the stochastic protocol {}",
                raw.protocol.as_str()
            )));
        }
        let typed = ProtocolParams::parse(raw.protocol, Value::Object(parameters))?;
        let scenario = Scenario {
            protocol: raw.protocol,
            name: raw
                .name
                .unwrap_or_else(|| raw.protocol.as_str().to_string()),
            seed,
            parameters: typed.to_map(),
            sweep: raw.sweep,
            output_dir: raw.output_dir,
        };
        if scenario.name.is_empty() || scenario.name.contains(['/', '\\']) {
            return Err(CliError::Config(format!(
                "name: {:?} is not a valid file stem",
                scenario.name
            )));
        }
        if let Some(sweep) = &scenario.sweep {
            if !scenario
                .parameters
                .contains_key(canonical_key(scenario.protocol, &sweep.parameter))
            {
                let known: Vec<&str> = scenario.parameters.keys().map(String::as_str).collect();
                return Err(CliError::Config(format!(
                    "sweep.parameter: {:?} is not a {} parameter (expected one of {})",
                    sweep.parameter,
                    scenario.protocol.as_str(),
                    known.join(", ")
                )));
            }
            if sweep.values.is_empty() {
                return Err(CliError::Config("sweep.values: must not be empty".into()));
            }
        }
        // validates every point up front
        scenario.points()?;
        Ok(scenario)
    }

    /// Resolved parameters for each sweep value, in order.
    pub fn points(&self) -> Result<Vec<SweepPoint>, CliError> {
        let seed = self.seed.unwrap_or(0);
        let Some(sweep) = &self.sweep else {
            let params =
                ProtocolParams::parse(self.protocol, Value::Object(self.parameters.clone()))?;
            params.validate(seed)?;
            return Ok(vec![SweepPoint {
                value: None,
                params,
            }]);
        };
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(i, value)| {
                let key = canonical_key(self.protocol, &sweep.parameter);
                let mut map = self.parameters.clone();
                map.insert(key.to_string(), value.clone());
                for other in exclusive_partner(self.protocol, key) {
                    map.insert(other.to_string(), Value::Null);
                }
                let params = ProtocolParams::parse(self.protocol, Value::Object(map))
                    .map_err(|e| CliError::Config(format!("sweep value #{i} ({value}): {e}")))?;
                params
                    .validate(seed)
                    .map_err(|e| CliError::Config(format!("sweep value #{i} ({value}): {e}")))?;
                Ok(SweepPoint {
                    value: Some(value.clone()),
                    params,
                })
            })
            .collect()
    }
}

/// Resolves the short alias `s` for the readout strength.
fn canonical_key(protocol: Protocol, key: &str) -> &str {
    match (protocol, key) {
        (Protocol::FeedbackDemon, "s") => "strength",
        _ => key,
    }
}

/// Keys cleared when the sweep sets their alternative.
fn exclusive_partner(protocol: Protocol, key: &str) -> &'static [&'static str] {
    match (protocol, key) {
        (Protocol::FeedbackDemon, "beta_homega") => &["excited_population"],
        (Protocol::FeedbackDemon, "excited_population") => &["beta_homega"],
        _ => &[],
    }
}

/// Seed used for sweep point `index`; point 0 uses the scenario seed itself.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProtocolParams {
    Feedback(FeedbackParams),
    Trajectory(TrajectoryParams),
    Autonomous(AutonomousParams),
    Landauer(LandauerParams),
}

impl ProtocolParams {
    pub fn parse(protocol: Protocol, value: Value) -> Result<Self, CliError> {
        let err = |e: serde_json::Error| CliError::Config(format!("parameters: {e}"));
        Ok(match protocol {
            Protocol::FeedbackDemon => {
                let mut p: FeedbackParams = serde_json::from_value(value).map_err(err)?;
                if p.beta_homega.is_none() && p.excited_population.is_none() {
                    p.excited_population = Some(0.1);
                }
                ProtocolParams::Feedback(p)
            }
            Protocol::TrajectoryDemon => {
                ProtocolParams::Trajectory(serde_json::from_value(value).map_err(err)?)
            }
            Protocol::AutonomousDemon => {
                ProtocolParams::Autonomous(serde_json::from_value(value).map_err(err)?)
            }
            Protocol::Landauer => {
                ProtocolParams::Landauer(serde_json::from_value(value).map_err(err)?)
            }
        })
    }

    pub fn to_map(&self) -> Map<String, Value> {
        let v = match self {
            ProtocolParams::Feedback(p) => serde_json::to_value(p),
            ProtocolParams::Trajectory(p) => serde_json::to_value(p),
            ProtocolParams::Autonomous(p) => serde_json::to_value(p),
            ProtocolParams::Landauer(p) => serde_json::to_value(p),
        };
        match v {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("parameter records serialize to objects"),
        }
    }

    pub fn validate(&self, seed: u64) -> Result<(), CliError> {
        match self {
            ProtocolParams::Feedback(p) => p.config(seed)?.validate()?,
            ProtocolParams::Trajectory(p) => p.config(seed)?.validate()?,
            ProtocolParams::Autonomous(p) => {
                p.config()?.validate()?;
                p.husimi_grid()?;
            }
            ProtocolParams::Landauer(p) => p.config().validate()?,
        }
        Ok(())
    }
}

/// Measurement strength: a number or `"inf"` for the projective limit.
mod strength {
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};
    use serde_json::Value;

    pub fn serialize<S: Serializer>(s: &f64, ser: S) -> Result<S::Ok, S::Error> {
        if s.is_infinite() && *s > 0.0 {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(*s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<f64, D::Error> {
        match Value::deserialize(de)? {
            Value::Number(n) => n
                .as_f64()
                .ok_or_else(|| D::Error::custom("strength: not a number")),
            Value::String(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(f64::INFINITY)
            }
            other => Err(D::Error::custom(format!(
                "strength: expected a number or \"inf\", got {other}"
            ))),
        }
    }
}

fn range_error(field: &str, value: f64, range: &str) -> CliError {
    CliError::Config(format!("{field}: {value} outside the valid range {range}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeedbackParams {
    /// Thermal excited population; alternative to `beta_homega`.
    pub excited_population: Option<f64>,
    pub beta_homega: Option<f64>,
    #[serde(with = "strength", alias = "s")]
    pub strength: f64,
    pub threshold: f64,
    pub t1_ratio: f64,
    pub trials: usize,
    pub feedback: bool,
}

impl Default for FeedbackParams {
    fn default() -> Self {
        let d = FeedbackDemonConfig::default();
        Self {
            excited_population: None,
            beta_homega: None,
            strength: d.model.strength,
            threshold: d.model.threshold,
            t1_ratio: d.t1_ratio,
            trials: d.trials,
            feedback: d.feedback,
        }
    }
}

impl FeedbackParams {
    pub fn config(&self, seed: u64) -> Result<FeedbackDemonConfig, CliError> {
        let beta_homega = match (self.excited_population, self.beta_homega) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "excited_population and beta_homega are mutually exclusive".into(),
                ))
            }
            (Some(p), None) => {
                if !(p > 0.0 && p < 0.5) {
                    return Err(range_error("excited_population", p, "(0, 0.5)"));
                }
                beta_homega_from_population(p)
            }
            (None, Some(b)) => b,
            (None, None) => beta_homega_from_population(0.1),
        };
        Ok(FeedbackDemonConfig {
            beta_homega,
            model: GaussianMeasurementModel {
                strength: self.strength,
                threshold: self.threshold,
            },
            t1_ratio: self.t1_ratio,
            trials: self.trials,
            seed,
            feedback: self.feedback,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeName {
    GaussianSplit,
    Kraus,
    NormalizedEuler,
    EulerMaruyama,
}

impl From<SchemeName> for SmeScheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::GaussianSplit => SmeScheme::GaussianSplit,
            SchemeName::Kraus => SmeScheme::Kraus,
            SchemeName::NormalizedEuler => SmeScheme::NormalizedEuler,
            SchemeName::EulerMaruyama => SmeScheme::EulerMaruyama,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    pub beta_homega: f64,
    pub eta: f64,
    pub gamma_m: f64,
    pub rabi: f64,
    pub decay_rate: f64,
    pub dt: f64,
    pub t_m: f64,
    pub trials: usize,
    pub scheme: SchemeName,
    /// Diagonal prior with this excited population instead of the thermal one.
    pub initial_excited_population: Option<f64>,
    pub first_tpm: bool,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self {
            beta_homega: 4.0,
            eta: 0.3,
            gamma_m: 1.0,
            rabi: 1.0,
            decay_rate: 0.0,
            dt: 0.01,
            t_m: 1.0,
            trials: 100_000,
            scheme: SchemeName::GaussianSplit,
            initial_excited_population: None,
            first_tpm: true,
        }
    }
}

impl TrajectoryParams {
    pub fn config(&self, seed: u64) -> Result<TrajectoryDemonConfig, CliError> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(range_error("eta", self.eta, "[0, 1]"));
        }
        let sme =
            SmeConfig::new(self.dt, self.eta, self.gamma_m, seed)?.with_scheme(self.scheme.into());
        let mut cfg = TrajectoryDemonConfig::new(
            self.beta_homega,
            sme,
            self.rabi,
            self.t_m,
            self.trials,
            seed,
        );
        cfg.decay_rate = self.decay_rate;
        cfg.first_tpm = self.first_tpm;
        if let Some(p) = self.initial_excited_population {
            if !(0.0..=1.0).contains(&p) {
                return Err(range_error("initial_excited_population", p, "[0, 1]"));
            }
            cfg.initial_state = Some(DensityMatrix::thermal_qubit(p)?);
        }
        Ok(cfg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateName {
    IdealGates,
    PulsedHamiltonian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitName {
    Ground,
    Excited,
    Superposed,
    Thermal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AutonomousParams {
    /// Displacement amplitude `|α|`.
    pub alpha: f64,
    /// Phase of `α` in radians.
    pub alpha_phase: f64,
    pub n_cav: Option<usize>,
    pub gate_model: GateName,
    pub initial_qubit: InitName,
    /// Used by the thermal initialization.
    pub excited_population: f64,
    /// Polar and azimuthal angles of the superposed initialization.
    pub theta: f64,
    pub phi: f64,
    pub gamma_a: f64,
    pub rabi: f64,
    pub pulse_steps: usize,
    pub chi: f64,
    /// Half-width of the square Husimi grid; `None` uses `|α| + 3`.
    pub husimi_extent: Option<f64>,
    /// Grid points per axis.
    pub husimi_points: usize,
}

impl Default for AutonomousParams {
    fn default() -> Self {
        let d = AutonomousDemonConfig::default();
        Self {
            alpha: d.alpha.norm(),
            alpha_phase: 0.0,
            n_cav: None,
            gate_model: GateName::IdealGates,
            initial_qubit: InitName::Thermal,
            excited_population: 0.3,
            theta: std::f64::consts::FRAC_PI_2,
            phi: 0.0,
            gamma_a: d.gamma_a,
            rabi: d.rabi,
            pulse_steps: d.pulse_steps,
            chi: d.chi,
            husimi_extent: None,
            husimi_points: 41,
        }
    }
}

impl AutonomousParams {
    pub fn config(&self) -> Result<AutonomousDemonConfig, CliError> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(range_error("alpha", self.alpha, "[0, inf)"));
        }
        if !(0.0..=1.0).contains(&self.excited_population) {
            return Err(range_error(
                "excited_population",
                self.excited_population,
                "[0, 1]",
            ));
        }
        Ok(AutonomousDemonConfig {
            alpha: C64::from_polar(self.alpha, self.alpha_phase),
            n_cav: self.n_cav,
            gate_model: match self.gate_model {
                GateName::IdealGates => GateModel::IdealGates,
                GateName::PulsedHamiltonian => GateModel::PulsedHamiltonian,
            },
            initial_qubit: match self.initial_qubit {
                InitName::Ground => QubitInit::Ground,
                InitName::Excited => QubitInit::Excited,
                InitName::Superposed => QubitInit::Superposed {
                    theta: self.theta,
                    phi: self.phi,
                },
                InitName::Thermal => QubitInit::Thermal {
                    p_e: self.excited_population,
                },
            },
            gamma_a: self.gamma_a,
            rabi: self.rabi,
            pulse_steps: self.pulse_steps,
            chi: self.chi,
        })
    }

    /// Row-major square grid of `husimi_points²` phase-space points.
    pub fn husimi_grid(&self) -> Result<Vec<C64>, CliError> {
        let extent = self.husimi_extent.unwrap_or(self.alpha + 3.0);
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(range_error("husimi_extent", extent, "(0, inf)"));
        }
        if self.husimi_points < 2 {
            return Err(CliError::Config("husimi_points: must be >= 2".into()));
        }
        let n = self.husimi_points;
        let step = 2.0 * extent / (n - 1) as f64;
        let axis: Vec<f64> = (0..n).map(|i| -extent + i as f64 * step).collect();
        Ok(axis
            .iter()
            .flat_map(|&im| axis.iter().map(move |&re| C64::new(re, im)))
            .collect())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandauerParams {
    pub beta_homega1: f64,
    pub omega2_ratio: f64,
    pub ramp_steps: usize,
}

impl Default for LandauerParams {
    fn default() -> Self {
        let d = LandauerConfig::default();
        Self {
            beta_homega1: d.beta_homega1,
            omega2_ratio: d.omega2_ratio,
            ramp_steps: d.ramp_steps,
        }
    }
}

impl LandauerParams {
    pub fn config(&self) -> LandauerConfig {
        LandauerConfig {
            beta_homega1: self.beta_homega1,
            omega2_ratio: self.omega2_ratio,
            ramp_steps: self.ramp_steps,
        }
    }
}
