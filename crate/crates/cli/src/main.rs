//! `beamadapt`: experiment driver.
//!
//! Exit codes: 0 on success, 2 when the scenario is infeasible, 1 on usage
//! or I/O errors.

mod commands;
mod output;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{CellularArgs, ConvergeArgs, FeasibleSetArgs, OptGapArgs, SingleLinkArgs, TwoLinkArgs};
use crate::output::OutputArgs;

#[derive(Debug, Parser)]
#[command(name = "beamadapt", version, about = "Uplink beamsteering experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Client power against required capacity for one interference-free link.
    SingleLink {
        #[command(flatten)]
        args: SingleLinkArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Two-link network power for fixed sizes and the joint optimum.
    TwoLinkSweep {
        #[command(flatten)]
        args: TwoLinkArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Round-by-round BeamAdapt trace on one scenario.
    Converge {
        #[command(flatten)]
        args: ConvergeArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// BeamAdapt against the exact optimum and all-omni over random placements.
    OptGap {
        #[command(flatten)]
        args: OptGapArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Largest simultaneously feasible subset of random candidate links.
    FeasibleSet {
        #[command(flatten)]
        args: FeasibleSetArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Frame-level cellular simulation.
    Cellular {
        #[command(flatten)]
        args: CellularArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::SingleLink { args, out } => commands::single_link(&args, &out),
        Command::TwoLinkSweep { args, out } => commands::two_link_sweep(&args, &out),
        Command::Converge { args, out } => commands::converge(&args, &out),
        Command::OptGap { args, out } => commands::opt_gap(&args, &out),
        Command::FeasibleSet { args, out } => commands::feasible_set(&args, &out),
        Command::Cellular { args, out } => commands::cellular(&args, &out),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let infeasible = err.chain().any(|e| {
        e.downcast_ref::<beamadapt_core::Error>()
            .is_some_and(beamadapt_core::Error::is_infeasible)
            || e.is::<commands::Infeasible>()
    });
    if infeasible {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
