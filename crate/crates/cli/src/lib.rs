//! Scenario runner for the demon protocols: parses JSON scenarios, runs the
//! requested sweep, and writes CSV results with a JSON metadata sidecar.

pub mod error;
pub mod output;
pub mod runner;
pub mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

pub use error::CliError;
pub use runner::{execute, ResultTable};
pub use scenario::{Overrides, Protocol, Scenario};

/// Options of the `run` subcommand.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
    /// Worker threads; 0 uses one per available core.
    pub workers: usize,
    pub bits: bool,
}

pub fn load_scenario(path: &Path, overrides: Overrides) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text, overrides)
}

/// Parse, execute and write one scenario. Returns the written files.
pub fn run_scenario(path: &Path, opts: &RunOptions) -> Result<Vec<PathBuf>, CliError> {
    let scenario = load_scenario(path, opts.overrides)?;
    let table = qdemon_core::parallel::with_workers(opts.workers, || execute(&scenario))
        .map_err(CliError::Pool)??;
    let dir = opts
        .out
        .clone()
        .or_else(|| scenario.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    output::write_outputs(
        &dir,
        &scenario,
        &table,
        &output::RunInfo {
            workers: opts.workers,
            bits: opts.bits,
        },
    )
}

/// Resolved scenario as pretty JSON, defaults included.
pub fn validate_scenario(path: &Path, overrides: Overrides) -> Result<String, CliError> {
    let scenario = load_scenario(path, overrides)?;
    serde_json::to_string_pretty(&scenario).map_err(|e| CliError::Config(e.to_string()))
}
