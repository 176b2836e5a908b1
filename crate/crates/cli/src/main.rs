mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gpg_core::{NumMode, PairMethod};

#[derive(Parser, Debug)]
#[command(name = "gpg", version, about = "Solve generalized Pig dice games exactly")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Preset {
    Pig,
    Piglet,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArgs {
    /// Spec file: {"n": 6, "probs": ["1/6", ...], "target": 100}
    #[arg(value_name = "SPEC", required_unless_present = "preset", conflicts_with = "preset")]
    pub spec: Option<PathBuf>,
    /// Built-in die instead of a spec file
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Override the target score
    #[arg(long, short = 'N')]
    pub target: Option<usize>,
    /// Arithmetic backend
    #[arg(long, env = NumMode::ENV_VAR, default_value = "float", value_parser = parse_mode)]
    pub mode: NumMode,
    /// Sub-game solver
    #[arg(long, default_value = "cells", value_parser = parse_method)]
    pub method: PairMethod,
}

fn parse_mode(s: &str) -> Result<NumMode, String> {
    s.parse::<NumMode>().map_err(|e| e.to_string())
}

fn parse_method(s: &str) -> Result<PairMethod, String> {
    s.parse()
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve every sub-game and print v(N,N)
    Solve {
        #[command(flatten)]
        spec: SpecArgs,
        /// Write the value table as CSV
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the optimal policy as CSV
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Verify curve shapes and residuals while solving (construct method)
        #[arg(long)]
        check: bool,
    },
    /// Print the winning probability of the player to move at (a, b, tau)
    Value {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 0)]
        tau: usize,
    },
    /// Print the optimal action at (a, b, tau)
    Policy {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        tau: usize,
    },
    /// Export the two start-of-turn curves of sub-game (a, b) and their intersection
    Curve {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        /// Directory for f_ab.csv, f_ba.csv and intersection.csv
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure step counts across targets (float arithmetic)
    Bench {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value = "10,20,40,80", value_delimiter = ',')]
        targets: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the solver against plain value iteration
    Oracle {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 10)]
        max_target: usize,
        #[arg(long, default_value_t = 1e-13)]
        tolerance: f64,
    },
    /// Play optimal against optimal and report the first player's win rate
    Simulate {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, default_value_t = 100_000)]
        games: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Maximize the expected score of a single turn
    Solitaire {
        #[command(flatten)]
        spec: SpecArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err.source);
            ExitCode::from(err.kind.code())
        }
    }
}
