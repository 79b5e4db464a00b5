//! `qbound`: Holevo bounds, accessible regions and homodyne simulations from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 invalid configuration, 3 solver
//! non-convergence, 4 statistical acceptance failure.

mod commands;
mod config;
mod output;
mod verify;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Params;
use verify::VerifyArgs;

#[derive(Debug, Parser)]
#[command(
    name = "qbound",
    version,
    about = "Holevo Cramér-Rao bounds for squeezed-state displacement sensing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Holevo bound for one probe and weight pair.
    Bound(Params),
    /// Accessible-region boundary or envelope as CSV.
    Region(Params),
    /// Monte-Carlo run of a dual-homodyne scheme.
    Simulate(Params),
    /// Cross-check solvers, closed forms and simulator.
    Verify(VerifyArgs),
}

#[derive(Debug)]
pub enum Failure {
    Verify(String),
    Config(String),
    Solver(String),
    Statistical(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Verify(_) => 1,
            Failure::Config(_) | Failure::Io(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Statistical(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Verify(m) => write!(f, "verification failed: {m}"),
            Failure::Config(m) => write!(f, "invalid configuration: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::Statistical(m) => write!(f, "statistical acceptance failed: {m}"),
            Failure::Io(m) => write!(f, "output error: {m}"),
        }
    }
}

impl From<qbound::Error> for Failure {
    fn from(e: qbound::Error) -> Self {
        match e {
            qbound::Error::NotConverged(_) => Failure::Solver(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("QBOUND_THREADS") else {
        return Ok(());
    };
    let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Config(format!(
            "QBOUND_THREADS must be a positive integer, got {v:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    init_threads()?;
    match cli.command {
        Command::Bound(p) => commands::bound(&p.resolve()?),
        Command::Region(p) => commands::region(&p.resolve()?),
        Command::Simulate(p) => commands::simulate(&p.resolve()?),
        Command::Verify(v) => verify::run(&v),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qbound: {e}");
            ExitCode::from(e.code())
        }
    }
}
