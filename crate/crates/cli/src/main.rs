//! `msraft`: estimate, evaluate and inspect optical flow from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

mod commands;
mod options;

use std::process::ExitCode;

use clap::Parser;

use options::{Cli, Command};

/// Why a command did not succeed.
pub enum Failure {
    /// Bad flags, unreadable input, mismatched sizes.
    Input(anyhow::Error),
    /// The command ran but its check did not hold.
    Verification(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

pub type Outcome = Result<(), Failure>;

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("MSRAFT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("MSRAFT_THREADS must be a non-negative integer, got {raw:?}"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let outcome = match cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Eval(a) => commands::eval(a),
        Command::CheckCorr(a) => commands::check_corr(a),
        Command::MixPlan(a) => commands::mix_plan(a),
        Command::Warp(a) => commands::warp(a),
        Command::Viz(a) => commands::viz(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
