//! Ensemble estimators with error bars, work histograms, and thermal-qubit
//! helpers.
//!
//! Exponential averages are computed on the canonically sorted sample set, so
//! they are independent of sample order and of how an ensemble was sharded.

use rand::Rng;

use crate::error::{Error, Result};
use crate::parallel::{map_trials, trial_rng, Execution};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Seed of the bootstrap stream when the caller does not pick one.
pub const DEFAULT_BOOTSTRAP_SEED: u64 = 0x5eed_b007;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorMethod {
    Plain,
    Bootstrap,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimatorResult {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub method: EstimatorMethod,
}

impl EstimatorResult {
    /// `|mean − target|` in units of the standard error (infinite if the
    /// error is zero and the mean is off).
    pub fn z_score(&self, target: f64) -> f64 {
        let diff = (self.mean - target).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

/// `⟨e^x⟩` with a seeded bootstrap standard error. Non-finite samples are
/// rejected; callers exclude irreversible trials beforehand.
pub fn exp_average(samples: &[f64]) -> Result<EstimatorResult> {
    exp_average_with(samples, DEFAULT_BOOTSTRAP_SEED, Execution::default())
}

pub fn exp_average_with(samples: &[f64], seed: u64, exec: Execution) -> Result<EstimatorResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!("non-finite exponent {bad}"),
        });
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let shift = *sorted.last().expect("nonempty");
    let weights: Vec<f64> = sorted.iter().map(|x| (x - shift).exp()).collect();
    let n = weights.len();
    let mean = weights.iter().sum::<f64>() / n as f64;

    let resampled = map_trials(BOOTSTRAP_RESAMPLES, exec, |b| {
        let mut rng = trial_rng(seed, b as u64);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += weights[rng.random_range(0..n)];
        }
        acc / n as f64
    });
    let scale = shift.exp();
    Ok(EstimatorResult {
        mean: mean * scale,
        std_error: sample_std(&resampled) * scale,
        n_samples: n,
        method: EstimatorMethod::Bootstrap,
    })
}

/// Plain mean and standard error of the mean.
pub fn average_information(samples: &[f64]) -> Result<EstimatorResult> {
    plain_mean(samples)
}

pub fn plain_mean(samples: &[f64]) -> Result<EstimatorResult> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let std_error = if n > 1 {
        sample_std(samples) / (n as f64).sqrt()
    } else {
        0.0
    };
    Ok(EstimatorResult {
        mean,
        std_error,
        n_samples: n,
        method: EstimatorMethod::Plain,
    })
}

fn sample_std(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    var.sqrt()
}

/// Excited population `1/(1 + e^{βħω})` of a thermal qubit.
pub fn thermal_excited_population(beta_homega: f64) -> f64 {
    // written to stay finite for large arguments
    let e = (-beta_homega.abs()).exp();
    if beta_homega >= 0.0 {
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + e)
    }
}

/// Inverse of [`thermal_excited_population`] for `p_e ∈ (0, 1/2]`.
pub fn beta_homega_from_population(p_e: f64) -> f64 {
    ((1.0 - p_e) / p_e).ln()
}

/// Shannon entropy (nats) of the thermal qubit populations.
pub fn shannon_entropy_thermal(beta_homega: f64) -> f64 {
    binary_entropy(thermal_excited_population(beta_homega))
}

/// `−p ln p − (1−p) ln(1−p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x > 0.0 { -x * x.ln() } else { 0.0 };
    h(p) + h(1.0 - p)
}

/// Work histogram with explicit bin edges; samples outside the edges are
/// counted in the first or last bin so counts always sum to the sample count.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkHistogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl WorkHistogram {
    pub fn new(samples: &[f64], bin_edges: Vec<f64>) -> Result<Self> {
        if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter {
                name: "bin_edges",
                reason: "need at least two strictly increasing edges".into(),
            });
        }
        let bins = bin_edges.len() - 1;
        let mut counts = vec![0u64; bins];
        for &x in samples {
            let idx = bin_edges[1..bins].partition_point(|&e| e <= x);
            counts[idx] += 1;
        }
        Ok(Self { bin_edges, counts })
    }

    /// Unit-width bins centred on the integers spanned by the samples, the
    /// natural choice for TPM work in units of `ω_q`.
    pub fn integer_bins(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySamples);
        }
        let lo = samples
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
            .round() as i64;
        let hi = samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
            .round() as i64;
        let edges = (lo..=hi + 1).map(|k| k as f64 - 0.5).collect();
        Self::new(samples, edges)
    }

    pub fn n_samples(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn exp_average_examples() {
        let r = exp_average(&[0.0; 10]).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
        let r = exp_average(&[2f64.ln(), 0.5f64.ln()]).unwrap();
        assert_abs_diff_eq!(r.mean, 1.25, epsilon = 1e-15);
        assert_eq!(r.method, EstimatorMethod::Bootstrap);
    }

    #[test]
    fn exp_average_survives_large_exponents() {
        let r = exp_average(&[700.0, 700.0 + 2f64.ln()]).unwrap();
        assert_abs_diff_eq!(r.mean / 700f64.exp(), 1.5, epsilon = 1e-12);
        assert!(r.std_error.is_finite());
    }

    #[test]
    fn exp_average_rejects_bad_input() {
        assert_eq!(exp_average(&[]), Err(Error::EmptySamples));
        assert!(exp_average(&[f64::NAN]).is_err());
        assert!(exp_average(&[f64::NEG_INFINITY]).is_err());
    }

    #[test]
    fn information_examples() {
        let r = average_information(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(r.mean, 1.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.method, EstimatorMethod::Plain);
        assert_eq!(average_information(&[]), Err(Error::EmptySamples));
    }

    #[test]
    fn shannon_examples() {
        let p = thermal_excited_population(4.0);
        assert_abs_diff_eq!(p, 0.017986, epsilon = 1e-6);
        assert_abs_diff_eq!(shannon_entropy_thermal(4.0), 0.090095, epsilon = 1e-6);
        assert_abs_diff_eq!(shannon_entropy_thermal(1e-9), 2f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(shannon_entropy_thermal(800.0), 0.0, epsilon = 1e-300);
        assert_abs_diff_eq!(
            beta_homega_from_population(thermal_excited_population(2.5)),
            2.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn histogram_counts_everything() {
        let h = WorkHistogram::integer_bins(&[-1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(h.counts, vec![1, 2, 3]);
        assert_eq!(h.bin_edges, vec![-1.5, -0.5, 0.5, 1.5]);
        let h = WorkHistogram::new(&[-10.0, 0.2, 10.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(h.counts, vec![2, 1]);
        assert_eq!(h.n_samples(), 3);
        assert!(WorkHistogram::new(&[], vec![1.0, 1.0]).is_err());
    }
}
