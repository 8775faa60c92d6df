//! `hspredict` command-line front end.
//!
//! [`run`] parses arguments, merges `--config`, applies the worker cap from
//! `HSPREDICT_THREADS` and maps failures to exit codes: 0 ok, 2 bad
//! configuration or input, 3 numeric failure.

pub mod args;
mod commands;
pub mod table;
pub mod verify;

use std::ffi::OsString;

use clap::Parser;
use hspredict_core::Error;

pub use commands::{scheme_sparsity, SCHEME_COUNT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub(crate) fn io(e: impl std::fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }

    /// One JSON object on one line.
    pub fn to_line(&self) -> String {
        let (kind, msg) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Numeric(m) => ("numeric", m),
        };
        serde_json::json!({ "error": kind, "message": msg }).to_string()
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Domain(_) | Error::Io(_) => CliError::Config(e.to_string()),
            Error::Numeric(_) | Error::NoConvergence { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

fn worker_cap() -> Result<Option<usize>, CliError> {
    match std::env::var("HSPREDICT_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(CliError::Config(format!("HSPREDICT_THREADS must be a positive integer, got `{s}`"))),
        },
    }
}

/// Run one command line (including the program name). Returns the exit code;
/// errors are reported on stderr as a single line.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match args::Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            eprintln!("{}", CliError::Config(first).to_line());
            return EXIT_CONFIG;
        }
    };
    let result = worker_cap().and_then(|cap| match cap {
        None => commands::dispatch(cli.command),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| commands::dispatch(cli.command)),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.to_line());
            e.code()
        }
    }
}
