//! The `schoensdr` command-line tool.

pub mod args;
pub mod commands;
pub mod config;
pub mod data;
pub mod exit;
pub mod kernel_spec;
pub mod manifest;
pub mod tables;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use exit::{CliError, USAGE};

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
}

fn threads_of(cmd: &Command) -> usize {
    match cmd {
        Command::Reproduce(a) => a.common.threads,
        Command::KernelCheck(a) => a.common.threads,
        Command::Fit(a) => a.common.threads,
        Command::Predict(a) => a.common.threads,
        Command::Simulate(a) => a.threads,
    }
}

fn dispatch(cmd: &Command) -> Result<i32, CliError> {
    match cmd {
        Command::Reproduce(a) => commands::reproduce(a),
        Command::KernelCheck(a) => commands::kernel_check(a),
        Command::Fit(a) => commands::fit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Simulate(a) => commands::simulate(a),
    }
}

/// Parse arguments, run the command, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => USAGE,
            };
        }
    };
    init_logging(cli.verbose);
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(threads_of(&cli.command))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return exit::FAILURE;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
