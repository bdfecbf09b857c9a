use std::process::ExitCode;

use clap::{Parser, Subcommand};
use offhook::config::{ExperimentConfig, Overrides};
use offhook::{commands, CliError};

/// Car with two off-hooked trailers: nilpotent approximation and
/// sampled-data oscillating feedback.
#[derive(Parser)]
#[command(name = "offhook", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the parameters of the nilpotent model.
    Params(Overrides),
    /// Run the invariant suites.
    Verify {
        #[command(flatten)]
        overrides: Overrides,
        /// Perturb one closed-form bracket entry (suite self-test).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Simulate and write the trajectory CSV plus a run summary.
    Simulate(Overrides),
    /// Compare the one-period map with (1 - gamma eps) z0 over several eps.
    OrderStudy(Overrides),
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Params(o) => commands::params(&ExperimentConfig::resolve(&o)?, o.out.is_some()),
        Command::Verify {
            overrides,
            inject_fault,
        } => commands::verify(&ExperimentConfig::resolve(&overrides)?, inject_fault),
        Command::Simulate(o) => commands::simulate(&ExperimentConfig::resolve(&o)?),
        Command::OrderStudy(o) => commands::order_study(&ExperimentConfig::resolve(&o)?),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
