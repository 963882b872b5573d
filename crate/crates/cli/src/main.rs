mod args;
mod commands;
mod config;
mod error;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind as ClapErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::CliConfig;
use error::Result;

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    let global = CliConfig {
        workers: cli.workers,
        ..Default::default()
    };
    let merged = |flags: CliConfig| global.clone().overlay(flags.overlay(file.clone()));
    match &cli.command {
        Command::Validate(a) => commands::validate(&merged(a.to_config())),
        Command::Metrics(a) => commands::metrics_cmd(a, &merged(CliConfig::default())),
        Command::Synth(a) => commands::synth(a, &merged(CliConfig::default())),
        Command::Optimize(a) => commands::optimize(&merged(a.to_config()), a.tag.as_deref()).map(drop),
        Command::Baseline(a) => commands::baseline(a, &merged(a.to_config())),
        Command::Report(a) => commands::report(a, &merged(a.to_config())),
        Command::Hv(a) => commands::hv(a, &merged(CliConfig::default())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ClapErrorKind::DisplayHelp | ClapErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
