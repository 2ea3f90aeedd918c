//! The `limitlens` command line.
//!
//! Exit codes: 0 on success, 1 when the run finished but some shards or
//! days failed, 2 on a fatal error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;

pub mod args;
mod commands;
pub mod output;

pub use args::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] limitlens_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Finished, but with the listed problems.
    Partial(Vec<String>),
}

impl Status {
    pub fn from_problems(problems: Vec<String>) -> Self {
        if problems.is_empty() {
            Status::Ok
        } else {
            Status::Partial(problems)
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Partial(_) => 1,
        }
    }
}

/// Runs a parsed command on a pool of `--workers` threads.
pub fn run(cli: Cli) -> CliResult<Status> {
    match cli.workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?
            .install(|| commands::dispatch(&cli)),
        None => commands::dispatch(&cli),
    }
}

/// Parses, runs and reports; the return value is the process exit code.
pub fn main_with<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(status) => {
            if let Status::Partial(problems) = &status {
                for p in problems {
                    eprintln!("warning: {p}");
                }
            }
            ExitCode::from(status.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
