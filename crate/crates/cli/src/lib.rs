//! Command-line front end: canned scenarios, parameter sweeps and reports.

pub mod error;
pub mod report;
pub mod scenarios;
pub mod spec;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "seca", version, about = "Concurrent-event detection experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Print per-run detail
    #[arg(long, global = true)]
    pub verbose: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the canned overlap scenarios and check each detector's verdict
    Scenarios {
        /// Directory holding the scenario traces
        #[arg(long, value_name = "DIR")]
        fixtures: Option<PathBuf>,
        /// Also write scenarios.json here
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run an experiment spec and write results.csv and manifest.json
    Sweep {
        #[arg(long, value_name = "PATH")]
        spec: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Worker threads
        #[arg(long, value_name = "N", default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
        jobs: u64,
        /// Use seeds U64, U64+1, ... instead of the spec's list
        #[arg(long, value_name = "U64")]
        seed_override: Option<u64>,
    },
    /// Summarize a results.csv and write summary.json
    Report {
        #[arg(value_name = "RESULTS_CSV")]
        results: PathBuf,
        /// Where to write summary.json (defaults to the CSV's directory)
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scenarios { fixtures, out } => {
            let dir = fixtures.unwrap_or_else(scenarios::default_fixture_dir);
            scenarios::cmd_scenarios(&dir, out.as_deref(), cli.verbose).map(|_| ())
        }
        Command::Sweep { spec, out, jobs, seed_override } => sweep::cmd_sweep(&sweep::SweepArgs {
            spec: &spec,
            out: &out,
            jobs: jobs as usize,
            seed_override,
            verbose: cli.verbose,
        }),
        Command::Report { results, out } => {
            let summary = report::cmd_report(&results, out.as_deref())?;
            if summary.passed() {
                Ok(())
            } else {
                Err(CliError::Failed("one or more report checks failed".into()))
            }
        }
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
