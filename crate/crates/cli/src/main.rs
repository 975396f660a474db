//! `clarq`: ingest a clarification corpus, train scorers, simulate
//! conversations and evaluate them.
//!
//! Exit codes: 0 success, 1 input or validation error, 2 numeric failure
//! (diverged training, non-finite scores).

mod commands;
mod config;
mod crossval;
mod setup;

use std::process::ExitCode;

use clap::{ArgAction, Parser};
use log::LevelFilter;

#[derive(Debug, Parser)]
#[command(name = "clarq", version, about = "Clarifying-question selection experiments")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: commands::Command,
}

fn is_numeric(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|e| e.downcast_ref::<clarq::Error>().is_some_and(clarq::Error::is_numeric))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational = !e.use_stderr();
            let _ = e.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();

    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_numeric(&e) { 2 } else { 1 })
        }
    }
}
