//! Command-line front end: `tree`, `segment`, `sample`, `eval` and `tune`.
//!
//! [`run`] parses arguments, resolves the effective [`RunConfig`], runs the
//! command and maps failures to the exit codes in [`error::exit`].

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;

pub use args::Cli;
pub use config::RunConfig;
pub use error::{exit, CliError, CliResult};

/// Runs the tool on `args` (program name first) and returns the exit code.
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
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => exit::OK,
                _ => exit::USAGE,
            };
        }
    };
    match execute(cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let (cfg, command) = RunConfig::resolve(cli)?;
    match cfg.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::usage(format!("thread pool: {e}")))?;
            pool.install(|| commands::dispatch(&cfg, &command))
        }
        None => commands::dispatch(&cfg, &command),
    }
}
