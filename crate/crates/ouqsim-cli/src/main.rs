use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ouqsim_cli::runner::{run_file, RunError, RunOptions};
use ouqsim_cli::scenario::parse_scenario;
use ouqsim_cli::{compare, CompareError};

const EXIT_SCHEMA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "ouqsim",
    version,
    about = "Simulate one or two coupled qubits driven by correlated classical noise",
    after_help = "Exit codes: 0 success, 2 schema violation or bad usage, 3 numerical/runtime failure.\n\
                  OUQSIM_OUT sets the default output root for `run`."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario file and write results plus a manifest
    Run {
        /// Scenario document (TOML)
        scenario: PathBuf,
        /// Output root directory (default: $OUQSIM_OUT or ./runs)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario's random seed
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the sweep (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a scenario file against the schema, reporting every violation
    Validate {
        /// Scenario document (TOML)
        scenario: PathBuf,
    },
    /// Tabulate linewidths, purity half-lives and long-time fidelities
    /// across the sweeps of one or more run manifests
    Compare {
        /// Paths to manifest.json files from previous runs
        manifests: Vec<PathBuf>,
        /// Write the table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            scenario,
            out,
            seed,
            threads,
        } => {
            let options = RunOptions {
                out_root: out,
                seed_override: seed,
                threads,
            };
            match run_file(&scenario, &options) {
                Ok((manifest, dir)) => {
                    println!(
                        "wrote {} sweep point(s) to {}",
                        manifest.runs.len(),
                        dir.display()
                    );
                    ExitCode::SUCCESS
                }
                Err(RunError::Schema(err)) => {
                    for v in err.violations() {
                        eprintln!("{v}");
                    }
                    ExitCode::from(EXIT_SCHEMA)
                }
                Err(err) => {
                    eprintln!("{err}");
                    ExitCode::from(EXIT_NUMERICAL)
                }
            }
        }
        Command::Validate { scenario } => {
            let text = match std::fs::read_to_string(&scenario) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("cannot read {}: {e}", scenario.display());
                    return ExitCode::from(EXIT_NUMERICAL);
                }
            };
            match parse_scenario(&text) {
                Ok(_) => {
                    println!("OK");
                    ExitCode::SUCCESS
                }
                Err(err) => {
                    for v in err.violations() {
                        eprintln!("{v}");
                    }
                    ExitCode::from(EXIT_SCHEMA)
                }
            }
        }
        Command::Compare { manifests, out } => match compare(&manifests) {
            Ok(table) => {
                if let Some(path) = out {
                    if let Err(e) = std::fs::write(&path, &table) {
                        eprintln!("cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_NUMERICAL);
                    }
                } else {
                    print!("{table}");
                }
                ExitCode::SUCCESS
            }
            Err(err @ (CompareError::NoInputs | CompareError::GridMismatch { .. })) => {
                eprintln!("{err}");
                ExitCode::from(EXIT_SCHEMA)
            }
            Err(err) => {
                eprintln!("{err}");
                ExitCode::from(EXIT_NUMERICAL)
            }
        },
    }
}
