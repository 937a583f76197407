//! `dyadfe`: estimate, simulate and diagnose dyadic network formation models.
//!
//! Exit status is 0 whenever the inputs were valid, including when an
//! estimator is unavailable; 1 on I/O failures and 2 on invalid input.

mod config;
mod diagnose;
mod estimate;
mod report;
mod simulate;

use std::process::ExitCode;

use clap::Parser;
use dyadfe::InputError;

use config::{Args, Command, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Invalid(String),
}

impl From<InputError> for CliError {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Io(m) => CliError::Io(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Invalid(_) => 2,
        }
    }
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let report = match cfg.command {
        Command::Estimate => match cfg.threads {
            Some(t) if t > 1 => rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::Invalid(e.to_string()))?
                .install(|| estimate::run(cfg))?,
            _ => estimate::run(cfg)?,
        },
        Command::Simulate => simulate::run(cfg)?,
        Command::Diagnose => diagnose::run(cfg)?,
    };
    print!("{}", report.render());
    if let Some(dir) = &cfg.out_dir {
        report.write(dir)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = RunConfig::from_args(&args).and_then(|cfg| run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dyadfe: {e}");
            ExitCode::from(e.code())
        }
    }
}
