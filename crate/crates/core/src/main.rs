use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use lineup_spectral::cli::{run, CliError, RunConfig};

fn execute(config: &RunConfig) -> anyhow::Result<()> {
    let files = run(config)?;
    let mut out = std::io::stdout().lock();
    for f in files {
        writeln!(out, "{}", f.display()).context("writing file list")?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match execute(&config) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("lineup-spectral: {err:#}");
            let code = err
                .downcast_ref::<CliError>()
                .map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
