use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fie_core::cli::{cmd_audit, cmd_run, cmd_verify, EXIT_OK, EXIT_USAGE};
use fie_core::verify::{SuiteOptions, INVERTED_PRIORITY};

#[derive(Parser)]
#[command(name = "fie", version, about = "Adversarial packet injection on single-sink trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and print its summary.
    Run {
        scenario: PathBuf,
        /// Execution trace output, overriding the scenario's `trace`.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Comma-separated checkers, overriding the scenario's list.
        #[arg(long)]
        checkers: Option<String>,
    },
    /// Audit the injections of an execution trace against a (rho, sigma) bound.
    Audit {
        trace: PathBuf,
        #[arg(long)]
        rho: String,
        #[arg(long)]
        sigma: String,
    },
    /// Run the verification suite.
    Verify {
        /// Criterion numbers or name fragments, comma-separated.
        #[arg(long)]
        filter: Option<String>,
        /// Line length for the LOCAL-DOWNHILL criterion.
        #[arg(long)]
        downhill_nodes: Option<usize>,
        /// Seeded patterns per sweep setting.
        #[arg(long)]
        seeds: Option<u64>,
        /// Rounds per sweep run.
        #[arg(long)]
        sweep_rounds: Option<u64>,
        /// Give FIE the inverted path priority (mutation fixture).
        #[arg(long)]
        invert_priority: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let (mut out, mut err) = (io::stdout(), io::stderr());
    let code = match cli.command {
        Command::Run {
            scenario,
            trace,
            checkers,
        } => cmd_run(&scenario, trace.as_deref(), checkers.as_deref(), &mut out, &mut err),
        Command::Audit { trace, rho, sigma } => cmd_audit(&trace, &rho, &sigma, &mut out, &mut err),
        Command::Verify {
            filter,
            downhill_nodes,
            seeds,
            sweep_rounds,
            invert_priority,
        } => {
            let defaults = SuiteOptions::default();
            let opts = SuiteOptions {
                filter,
                downhill_nodes: downhill_nodes.unwrap_or(defaults.downhill_nodes),
                fie_priority: if invert_priority {
                    INVERTED_PRIORITY
                } else {
                    defaults.fie_priority
                },
                seeds: seeds.unwrap_or(defaults.seeds),
                sweep_rounds: sweep_rounds.unwrap_or(defaults.sweep_rounds),
            };
            cmd_verify(&opts, &mut out)
        }
    };
    ExitCode::from(code)
}
