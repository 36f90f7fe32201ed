//! Command-line front end of the `mfspin` binary.

pub mod config;
pub mod emit;

use std::ffi::OsString;
use std::time::Instant;

use crate::error::{Error, ErrorKind};

pub use config::{parse_config, parse_config_text, Command, ModelKind, OutputFormat, RunConfig};
pub use emit::{emit, execute, Artifact};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Usage | ErrorKind::Invalid => EXIT_USAGE,
        ErrorKind::Numerical => EXIT_NUMERICAL,
        ErrorKind::Resource | ErrorKind::Io => EXIT_RESOURCE,
    }
}

/// Parses `argv`, runs the command, writes its outputs and returns the
/// process exit code. Written paths go to stdout, errors to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let config = match config::try_parse(argv) {
        Ok(Ok(c)) => c,
        Ok(Err(e)) => {
            eprintln!("mfspin: {e}");
            return exit_code(&e);
        }
        Err(e) => {
            use clap::error::ErrorKind as K;
            let _ = e.print();
            return match e.kind() {
                K::DisplayHelp | K::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    let start = Instant::now();
    let outcome = execute(&config).and_then(|a| emit(&a, &config, start.elapsed()));
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("mfspin: {e}");
            exit_code(&e)
        }
    }
}
