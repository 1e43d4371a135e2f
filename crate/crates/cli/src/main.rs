use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qdemon_cli::{run_scenario, validate_scenario, Overrides, RunOptions};

#[derive(Parser)]
#[command(
    name = "qdemon",
    version,
    about = "Run quantum Maxwell's demon scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file (JSON).
    config: PathBuf,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of trials.
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write its results.
    Run {
        #[command(flatten)]
        common: Common,
        /// Output directory (default: the scenario's output_dir, else `.`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Report information and entropy columns in bits instead of nats.
        #[arg(long)]
        bits: bool,
    },
    /// Check a scenario and print it with all defaults filled in.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            common,
            out,
            workers,
            bits,
        } => {
            let opts = RunOptions {
                out,
                overrides: Overrides {
                    seed: common.seed,
                    trials: common.trials,
                },
                workers,
                bits,
            };
            run_scenario(&common.config, &opts).map(|files| {
                for f in files {
                    println!("wrote {}", f.display());
                }
            })
        }
        Command::Validate { common } => validate_scenario(
            &common.config,
            Overrides {
                seed: common.seed,
                trials: common.trials,
            },
        )
        .map(|text| println!("{text}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            if code == 3 {
                eprintln!("integrator aborted: {e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(code as u8)
        }
    }
}
