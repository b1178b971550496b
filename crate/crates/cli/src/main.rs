//! `daisy`: command-line front end for daisy-core.
//!
//! Machine output is JSON on stdout (DOT or plain lines for the inspection
//! commands); diagnostics go to stderr. Exit codes: 0 completed, 1 property
//! violated or unexpected witness, 2 usage or configuration error, 3 budget
//! exhausted.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use crate::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn exit_code_for(e: &anyhow::Error) -> u8 {
    use daisy_core::Error;
    match e.downcast_ref::<Error>() {
        Some(Error::Budget(_)) => 3,
        Some(Error::Internal(_)) => 1,
        _ => 2,
    }
}
