use std::process::ExitCode;

use clap::Parser;
use locinv::cli::{run, Cli};

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args_os().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = Cli::parse_from(&args);
    match run(&cli, args) {
        Ok(outcome) if outcome.passed => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("locinv: {}", outcome.manifest.status);
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("locinv: {e}");
            ExitCode::FAILURE
        }
    }
}
