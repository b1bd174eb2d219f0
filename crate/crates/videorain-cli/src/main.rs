//! Command line front end for the videorain library.
//!
//! Five subcommands bind the library into reproducible workflows: `derain`
//! (decompose a clip), `synth` (render synthetic rain), `estimate-angle`,
//! `eval` (compare against ground truth), and `bench` (the full synthetic
//! grid). Every command is deterministic given its flags and seed, and the
//! commands that write files leave behind a `run-manifest.txt` in key=value
//! form that can be fed back through `--config` to reproduce the run.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

mod commands;
mod config;
mod video;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::video::OutputFormat;

#[derive(Parser)]
#[command(name = "videorain", version, about = "Video rain-streak removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose a rainy clip into background and rain layers
    Derain(DerainArgs),
    /// Render synthetic rain streaks over a clean clip
    Synth(SynthArgs),
    /// Estimate the dominant streak angle of a clip
    EstimateAngle(EstimateAngleArgs),
    /// Score a decomposition against ground truth
    Eval(EvalArgs),
    /// Run the synthetic angle/intensity grid on clean clips
    Bench(BenchArgs),
}

#[derive(clap::Args)]
struct DerainArgs {
    /// Rainy clip: frame directory, single image, or raw tensor file
    #[arg(long)]
    input: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Streak angle in degrees, or "auto" to estimate it first
    #[arg(long)]
    theta: Option<String>,
    /// Regularization weights a1,a2,a3,a4,a5 (or one value for all)
    #[arg(long)]
    alpha: Option<String>,
    /// Penalty weights b1,...,b6 (or one value for all)
    #[arg(long)]
    beta: Option<String>,
    /// Relative-change stopping tolerance on the rain layer
    #[arg(long)]
    tol: Option<f64>,
    /// Outer iteration cap
    #[arg(long)]
    max_iters: Option<usize>,
    /// Weight preset to start from
    #[arg(long, value_enum)]
    density: Option<Density>,
    /// Output format for the background and rain layers
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<String>,
    /// Suppress the per-iteration log on stderr
    #[arg(long)]
    quiet: bool,
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Clean clip to rain on; omitted, a textured 64x64x20 clip is generated
    #[arg(long)]
    input: Option<String>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    /// Mean streak angle in degrees
    #[arg(long)]
    angle: Option<f64>,
    /// Rain intensity class
    #[arg(long, value_enum)]
    density: Option<Density>,
    /// RNG seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output format for the emitted clips
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// key=value config file; flags override its entries
    #[arg(long)]
    config: Option<String>,
}

#[derive(clap::Args)]
struct EstimateAngleArgs {
    /// Clip to analyze: frame directory, single image, or raw tensor file
    #[arg(long)]
    input: String,
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Estimated background clip
    #[arg(long)]
    estimate: String,
    /// Ground-truth background clip
    #[arg(long)]
    truth: String,
    /// Estimated rain layer (enables the rain SSIM column)
    #[arg(long, requires = "rain_truth")]
    rain_estimate: Option<String>,
    /// Ground-truth rain layer
    #[arg(long, requires = "rain_estimate")]
    rain_truth: Option<String>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Clean clips to run the grid on (repeatable)
    #[arg(long, required = true)]
    input: Vec<String>,
    /// RNG seed for the synthetic rain
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative-change stopping tolerance on the rain layer
    #[arg(long)]
    tol: Option<f64>,
    /// Outer iteration cap
    #[arg(long)]
    max_iters: Option<usize>,
}

/// Rain intensity class shared by `synth` (streak parameters) and `derain`
/// (solver weight preset).
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Density {
    Light,
    Heavy,
}

impl std::fmt::Display for Density {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Density::Light => write!(f, "light"),
            Density::Heavy => write!(f, "heavy"),
        }
    }
}

impl std::str::FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "light" => Ok(Density::Light),
            "heavy" => Ok(Density::Heavy),
            other => Err(format!("unknown density {other:?} (expected light or heavy)")),
        }
    }
}

/// Marker for errors in how the tool was invoked, as opposed to bad data.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(message.into()))
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    if let Some(lib) = err.downcast_ref::<videorain::Error>() {
        return match lib {
            videorain::Error::InvalidParameter(_) => 1,
            videorain::Error::Numerical(_) | videorain::Error::NonFiniteState { .. } => 3,
            _ => 2,
        };
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Derain(args) => commands::derain::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::EstimateAngle(args) => commands::estimate_angle::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
