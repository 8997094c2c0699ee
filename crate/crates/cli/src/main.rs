//! Experiment driver for memory-accelerated distributed averaging.
//!
//! Every run is reproducible: rerunning with the same flags and config file
//! rewrites byte-identical CSV and JSON artifacts.

mod config;
mod doi_cmd;
mod dump;
mod gain;
mod mse;
mod report;
mod verify;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{CommonArgs, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "consensus",
    about = "Distributed averaging experiments: two-tap accelerated consensus vs memoryless gossip",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-trial MSE traces for memoryless and accelerated averaging
    Mse {
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Spectral and empirical acceleration gain across sizes
    Gain {
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Check closed-form rate, gain, and spectrum predictions
    Verify {
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Decentralized lambda2 estimation vs the eigensolver oracle
    Doi {
        #[command(flatten)]
        args: CommonArgs,
    },
    /// Write graph edge lists plus optional debug dumps
    DumpGraph {
        #[command(flatten)]
        args: CommonArgs,
        /// Also dump the weight matrix (CSV, 17 significant digits)
        #[arg(long)]
        dump_weights: bool,
        /// Also dump the tuned operator spectrum (CSV: index,real,imag,modulus)
        #[arg(long)]
        dump_spectrum: bool,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Mse { args } => mse::run(&ExperimentConfig::resolve(args)?),
        Command::Gain { args } => gain::run(&ExperimentConfig::resolve(args)?),
        Command::Verify { args } => verify::run(&ExperimentConfig::resolve(args)?),
        Command::Doi { args } => doi_cmd::run(&ExperimentConfig::resolve(args)?),
        Command::DumpGraph { args, dump_weights, dump_spectrum } => {
            dump::run(&ExperimentConfig::resolve(args)?, *dump_weights, *dump_spectrum)
        }
    }
}
