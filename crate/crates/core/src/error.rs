use thiserror::Error;

/// Errors raised by state construction, integration, and protocol runs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid Hilbert space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("factor index {index} out of range for a space with {factors} factors")]
    InvalidFactor { index: usize, factors: usize },

    #[error("not Hermitian (max |A - A^dag| = {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPositive(f64),

    #[error("state norm is not 1 (got {0})")]
    InvalidNorm(f64),

    #[error(
        "Fock truncation {n_cav} too small for |alpha| = {alpha_abs}: tail mass {tail:.3e} >= 1e-8"
    )]
    TruncationTail {
        alpha_abs: f64,
        n_cav: usize,
        tail: f64,
    },

    #[error("step too large: dt * max(rate, |H|) = {0:.3e} exceeds 0.1")]
    StepTooLarge(f64),

    #[error("positivity lost at step {step} (min eigenvalue {min_eigenvalue:.3e}); reduce dt below {dt:e}")]
    PositivityLost {
        step: usize,
        min_eigenvalue: f64,
        dt: f64,
    },

    #[error("duration {duration} is not an integer number of steps of {dt}")]
    NonIntegerSteps { duration: f64, dt: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty sample set")]
    EmptySamples,

    #[error("trial {trial} of seed {seed} failed: {source}")]
    TrialFailed {
        trial: u64,
        seed: u64,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn in_trial(self, trial: usize, seed: u64) -> Error {
        Error::TrialFailed {
            trial: trial as u64,
            seed,
            source: Box::new(self),
        }
    }

    /// True for failures of a running integrator, as opposed to bad input.
    pub fn is_runtime(&self) -> bool {
        match self {
            Error::PositivityLost { .. } => true,
            Error::TrialFailed { source, .. } => source.is_runtime(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Shorthand used by config validators.
pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
