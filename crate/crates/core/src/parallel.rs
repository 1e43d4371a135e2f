//! Trial scheduling and per-trial random streams.
//!
//! Every trial draws from its own `ChaCha8` stream selected by trial index,
//! and results are collected in index order, so ensemble output does not
//! depend on the number of workers or on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How trial loops are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over trials. Falls back to sequential when the
    /// `parallel` feature is off.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

/// Independent stream `index` of the generator seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(0..n).map(f)` under the given execution mode, in index order.
pub fn map_trials<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        Execution::Sequential => (0..n).map(f).collect(),
        Execution::Parallel => parallel_map(n, f),
    }
}

/// Fallible [`map_trials`]; returns the error of the lowest failing index.
pub fn try_map_trials<T, E, F>(n: usize, exec: Execution, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    map_trials(n, exec, f).into_iter().collect()
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Run `f` on a dedicated pool of `workers` threads (0 means the default
/// pool). Without the `parallel` feature this just calls `f`.
#[cfg(feature = "parallel")]
pub fn with_workers<R, F>(workers: usize, f: F) -> Result<R, String>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| e.to_string())?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
pub fn with_workers<R, F>(_workers: usize, f: F) -> Result<R, String>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    Ok(f())
}
