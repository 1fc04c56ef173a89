mod args;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, FileConfig};
use commands::{RunContext, Status};
use output::OutputDir;

fn run(cli: Cli) -> Result<Status> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    let out = cli.out.or(file.out).unwrap_or_else(|| PathBuf::from("out"));
    let ctx = RunContext {
        seed: cli.seed.or(file.seed).unwrap_or(0),
        out: OutputDir::create(&out)?,
    };
    match cli.command {
        Command::Simulate(mut a) => {
            a.merge(file.simulate);
            commands::simulate(&ctx, a)
        }
        Command::Cohesion(mut a) => {
            a.merge(file.cohesion);
            commands::cohesion(&ctx, a)
        }
        Command::Pinning(mut a) => {
            a.merge(file.pinning);
            commands::pinning(&ctx, a)
        }
        Command::Sweep(mut a) => {
            a.merge(file.sweep);
            commands::sweep(&ctx, a)
        }
        Command::Fit(mut a) => {
            a.merge(file.fit);
            commands::fit(&ctx, a)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(Status::Done) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
