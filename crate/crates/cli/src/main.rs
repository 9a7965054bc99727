mod args;
mod commands;
mod script;

use std::io;
use std::process::ExitCode;

use clap::Parser;
use ealgebra::dsl::Diagnostic;
use ealgebra::DistError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error("{0}")]
    Parse(#[from] Diagnostic),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// What a successful invocation found.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Violation,
}

fn main() -> ExitCode {
    let cli = args::Cli::parse();
    if let Some(k) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            eprintln!("ea: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::dispatch(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Violation) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ea: {e}");
            ExitCode::from(2)
        }
    }
}
