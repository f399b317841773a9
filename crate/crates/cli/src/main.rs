//! `braess` command-line front end.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use braess_core::{ErrorCategory, GridError};
use clap::Parser;

use crate::commands::Command;

#[derive(Parser, Debug)]
#[command(name = "braess", version, about = "Braess paradox analysis for power grid flow models")]
struct Cli {
    /// Output directory for CSV/JSON artifacts and the run manifest.
    /// Defaults to `braess-out`, or to `out` in a study config.
    #[arg(long, global = true, env = "BRAESS_OUT_DIR")]
    out: Option<PathBuf>,

    /// Overrides the RNG seed of every ensemble (evaluate, generate).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for ensemble and sweep parallelism (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

fn exit_code(err: &GridError) -> u8 {
    match err.category() {
        ErrorCategory::Config => 2,
        ErrorCategory::InputData => 3,
        ErrorCategory::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command, cli.out.as_deref(), cli.seed) {
        Ok(written) => {
            for path in written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(exit_code(&e))
        }
    }
}
