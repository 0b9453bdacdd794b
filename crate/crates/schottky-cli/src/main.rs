//! `schottky`: decide whether a symmetric 4x4 matrix is the Riemann matrix
//! of a genus-4 curve (tropically or classically) and recover the curve.

mod commands;
mod io;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Tropical,
    Classical,
}

/// Effective configuration recorded in every report.
#[derive(Clone, Debug)]
pub struct Config {
    pub mode: Mode,
    pub eps: f64,
    pub threshold: f64,
    pub seed: u64,
    pub slow: bool,
    pub format: String,
    pub out: Option<PathBuf>,
}

impl Config {
    pub fn mode_str(&self) -> &'static str {
        match self.mode {
            Mode::Tropical => "tropical",
            Mode::Classical => "classical",
        }
    }
}

#[derive(Args, Debug)]
struct ModeArgs {
    /// exact rational input, tropical Schottky problem
    #[arg(long, conflicts_with = "classical")]
    tropical: bool,
    /// complex floating input, classical Schottky problem
    #[arg(long)]
    classical: bool,
}

impl ModeArgs {
    fn mode(&self) -> anyhow::Result<Mode> {
        match (self.tropical, self.classical) {
            (true, false) => Ok(Mode::Tropical),
            (false, true) => Ok(Mode::Classical),
            _ => anyhow::bail!("pass exactly one of --tropical / --classical"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "schottky", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// series accuracy for classical theta evaluation
    #[arg(long, global = true, default_value_t = 1e-10)]
    eps: f64,
    /// relative decision threshold for the classical form
    #[arg(long, global = true, default_value_t = 1e-4)]
    threshold: f64,
    /// seed for randomized restarts
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// output format
    #[arg(long, global = true, default_value = "json")]
    format: String,
    /// directory for report and artifact files (default: stdout / cwd)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// run the expensive exhaustive checks
    #[arg(long, global = true)]
    slow: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide Schottky-locus membership of a matrix file
    Decide {
        #[command(flatten)]
        mode: ModeArgs,
        /// matrix JSON file
        input: PathBuf,
    },
    /// Recover the curve: a metric graph (tropical) or canonical curve data
    /// with tritangent planes (classical)
    Recover {
        #[command(flatten)]
        mode: ModeArgs,
        input: PathBuf,
        /// also compute a GL4(Z) witness X with X^t Q X = B D B^t (tropical)
        #[arg(long)]
        basis: bool,
    },
    /// Evaluate a 1- or 2-parameter matrix pencil on a grid, CSV output
    Scan {
        #[command(flatten)]
        mode: ModeArgs,
        /// family JSON file (affine pencil with grid ranges)
        input: PathBuf,
    },
    /// Run the built-in verification suite
    Selftest,
}

fn main() {
    let cli = Cli::parse();
    if !(cli.eps > 0.0) || !(cli.threshold > 0.0) {
        eprintln!("error: tolerances must be positive");
        std::process::exit(2);
    }
    let make_cfg = |mode: Mode| Config {
        mode,
        eps: cli.eps,
        threshold: cli.threshold,
        seed: cli.seed,
        slow: cli.slow,
        format: cli.format.clone(),
        out: cli.out.clone(),
    };
    let outcome = match &cli.command {
        Command::Decide { mode, input } => mode
            .mode()
            .and_then(|m| commands::cmd_decide(&make_cfg(m), input)),
        Command::Recover { mode, input, basis } => mode
            .mode()
            .and_then(|m| commands::cmd_recover(&make_cfg(m), input, *basis)),
        Command::Scan { mode, input } => mode
            .mode()
            .and_then(|m| commands::cmd_scan(&make_cfg(m), input)),
        Command::Selftest => commands::cmd_selftest(&make_cfg(Mode::Tropical)),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
