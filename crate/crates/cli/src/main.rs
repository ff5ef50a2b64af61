use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod gate;
mod mem;
mod output;

const AFTER_HELP: &str = "\
Presets (--system):
  c2f3i   three fluorines of C2F3I: observer + 2 work qubits (4 lines, 512 pts @ 1 ms)
  tfba    four fluorines of 2,3,4,5-tetrafluorobenzoic acid: observer + 3 work qubits (8 lines, 2048 pts @ 10 ms)
  A path to a JSON or key=value spin system file is accepted instead.

Gates (--gate): nop, not1, not2, not3, not12, swap, cnot1, toffoli

Exit status: 0 success, 1 runtime failure or ambiguous correlation map, 2 usage error.";

#[derive(Debug, Parser)]
#[command(name = "hnmr", version, about = "Hadamard-encoded NMR quantum gate and memory-search simulator", after_help = AFTER_HELP)]
struct Cli {
    /// Root directory for outputs when --out is not given.
    #[arg(long, global = true, env = "HNMR_OUT", default_value = "hnmr-out")]
    out_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Two-dimensional gate experiments.
    #[command(subcommand, after_help = AFTER_HELP)]
    Gate(gate::GateCommand),
    /// Spatially encoded memory: record, write and search.
    #[command(subcommand)]
    Mem(mem::MemCommand),
    /// Print the bundled spin systems and their observer transitions.
    Presets,
}

/// Errors that exit with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Correlation map with a row that does not hold exactly one peak.
#[derive(Debug)]
pub struct AmbiguousMap(pub String);

impl std::fmt::Display for AmbiguousMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AmbiguousMap {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gate(cmd) => gate::run(cmd, &cli.out_root),
        Command::Mem(cmd) => mem::run(cmd, &cli.out_root),
        Command::Presets => gate::print_presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<UsageError>().is_some() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
