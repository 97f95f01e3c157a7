//! `prunekit` command-line front end.
//!
//! Thin shells around the library operations: each subcommand parses flags,
//! prints a reproducibility header, and delegates to `prunekit-core` or
//! `prunekit-toytrain`. Exit codes: 0 success, 1 validation error, 2 I/O
//! error. `PRUNEKIT_THREADS` caps the worker pool.

mod commands;
mod support;

use clap::error::ErrorKind;
use clap::Parser;

#[derive(Debug, Parser)]
#[command(
    name = "prunekit",
    version,
    about = "Training-dynamics dataset pruning: score, extrapolate, prune, analyze",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: commands::Command,
}

fn main() {
    support::cap_rayon_threads();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // --help and --version are successful outcomes; every other
            // parse failure is a validation error.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = cli.command.run() {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
