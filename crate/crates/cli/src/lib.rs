//! Command-line front end for `coinzk`.
//!
//! Every command produces a [`RunReport`]: a list of named checks with their
//! measured values and thresholds. The process exits with 0 iff every check
//! passes.

pub mod commands;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

pub use report::{Check, Measurement, RunReport, Threshold};

#[derive(Parser, Debug)]
#[command(name = "coinzk", version, about = "Coin-model quantum zero-knowledge demos and audits")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Also write the report as JSON to this file.
    #[arg(long, global = true, value_name = "OUT")]
    pub json: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hiding, binding and commitment checks for hidden bits.
    Hiddenbits {
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Add the exhaustive cheating-strategy enumeration.
        #[arg(long)]
        exhaustive: bool,
        /// Monte Carlo trials for the sampled binding estimate.
        #[arg(long, default_value_t = 4000)]
        trials: usize,
    },
    /// Compile the 3-colouring protocol for a graph and audit it.
    CompileDemo {
        graph: PathBuf,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Expected answer; a mismatch with the graph fails the run.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        /// Monte Carlo runs of the compiled circuit.
        #[arg(long, default_value_t = 64)]
        trials: usize,
    },
    /// Run the local-consistency protocol under the one-time pad.
    Lcdm {
        instance: PathBuf,
        /// Number of parallel repetitions.
        #[arg(long = "K", default_value_t = 8)]
        repetitions: usize,
        /// Security parameter of the pad-key hidden bits.
        #[arg(long, default_value_t = 1)]
        k_hb: usize,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
    },
    /// Build the unitary dilation of a channel and check it.
    Purify {
        channel: PathBuf,
        /// Random input states tried besides the basis states.
        #[arg(long, default_value_t = 16)]
        samples: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Expect {
    Yes,
    No,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

/// Failure before a report could be produced.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] coinzk::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use coinzk::Error as E;
        ExitCode::from(match self {
            CliError::Io { .. } => 5,
            CliError::Core(E::Unsupported(_) | E::TooManyQubits { .. } | E::BranchCap { .. }) => 4,
            CliError::Core(_) => 3,
        })
    }
}

pub fn read_input(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.clone(), source })
}

/// The command line without the `--json` destination, so that reports
/// written to different files compare equal.
pub fn command_echo(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
        } else if a == "--json" {
            skip = true;
        } else if !a.starts_with("--json=") {
            out.push(a);
        }
    }
    out
}

pub fn run(cli: &Cli, command: Vec<String>) -> Result<RunReport, CliError> {
    let start = std::time::Instant::now();
    let mut report = RunReport::new(command, cli.seed);
    match &cli.command {
        Command::Hiddenbits { k, exhaustive, trials } => {
            commands::hiddenbits(&mut report, *k, *exhaustive, *trials)?
        }
        Command::CompileDemo { graph, k, expect, trials } => {
            let g = coinzk::schema::parse_graph(&read_input(graph)?)?;
            commands::compile_demo(&mut report, &g, *k, *expect, *trials)?
        }
        Command::Lcdm { instance, repetitions, k_hb, mode, trials } => {
            let loaded = coinzk::schema::parse_instance(&read_input(instance)?)?;
            let mode = match mode {
                Mode::Exact => coinzk::lcdm::LcdmMode::Exact,
                Mode::Mc => coinzk::lcdm::LcdmMode::MonteCarlo { trials: *trials },
            };
            commands::lcdm(&mut report, &loaded, *repetitions, *k_hb, mode)?
        }
        Command::Purify { channel, samples } => {
            let kraus = coinzk::schema::parse_channel(&read_input(channel)?)?;
            commands::purify(&mut report, &kraus, *samples)?
        }
    }
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}
