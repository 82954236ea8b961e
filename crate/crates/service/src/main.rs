use std::process::ExitCode;

use clap::Parser;
use slopesim::cli::{run, Cli};
use slopesim::error::classify;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_env("SLOPESIM_LOG")
                .unwrap_or_else(|_| "info".into()),
        )
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", classify(&e).line());
            ExitCode::FAILURE
        }
    }
}
