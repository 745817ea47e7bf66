//! `qsl`: command-line front end for the speed-limit toolkit.
//!
//! Exit codes: 0 on success, 1 on invalid input, 2 when a computed result
//! violates one of the bounds it is supposed to respect.

mod commands;
mod spec;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

use commands::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] qsl_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// What a subcommand produced.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    /// Side files requested through flags such as `--csv`.
    pub files: Vec<(PathBuf, String)>,
    /// Set when a bound or conservation law failed.
    pub violation: Option<String>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let out_path = cli.out.clone();
    match commands::run(cli.command) {
        Ok(output) => {
            let write = || -> std::io::Result<()> {
                for (path, text) in &output.files {
                    fs::write(path, text)?;
                }
                match &out_path {
                    Some(path) => fs::write(path, format!("{}\n", output.stdout)),
                    None => {
                        let mut stdout = std::io::stdout().lock();
                        match writeln!(stdout, "{}", output.stdout) {
                            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                            other => other,
                        }
                    }
                }
            };
            if let Err(e) = write() {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
            match output.violation {
                Some(msg) => {
                    eprintln!("bound violation: {msg}");
                    EXIT_VIOLATION
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn main() {
    std::process::exit(dispatch(std::env::args_os()));
}
