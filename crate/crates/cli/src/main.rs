//! `nonmarkov`: process-tensor experiments from the command line.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 input
//! file error, 4 refused materialization.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, FileConfig, Format, ModelKind, Overrides, Settings};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "nonmarkov", version, about = "Non-Markovianity measures and hidden-model reconstruction for process tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dissipative XX chain at n = 0: fit, then both measures per rate.
    Fig2a(Common),
    /// Dissipative XX chain at n = 0.5: fit, then both measures per rate.
    Fig2b(Common),
    /// Memory complexity of the unitary dephasing model per rate.
    Fig3(Common),
    /// Fit a hidden model to a target process tensor.
    Reconstruct(Common),
    /// Both measures computed directly on a model.
    Measure(Common),
    /// Write a model's process tensor and channel files.
    Build(Common),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// k = 51, N = 5000, 5 restarts.
    #[arg(long)]
    paper_scale: bool,
    /// Number of steps.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated rates.
    #[arg(long, value_delimiter = ',')]
    gamma: Option<Vec<f64>>,
    /// Thermal occupation of the environment bath.
    #[arg(long)]
    n: Option<f64>,
    /// Time step.
    #[arg(long)]
    delta: Option<f64>,
    /// Environment dimension of the fitted model.
    #[arg(long)]
    env_dim: Option<usize>,
    /// Kraus rank of the fitted model.
    #[arg(long)]
    kraus_rank: Option<usize>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Channel file for `--model channel`.
    #[arg(long)]
    channel: Option<PathBuf>,
    /// Process tensor file for `--model target`.
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long)]
    restarts: Option<usize>,
    /// Largest step of the memory-complexity series.
    #[arg(long)]
    j_max: Option<usize>,
    /// Position grid size of the dephasing model.
    #[arg(long)]
    grid_points: Option<usize>,
    /// `build` also writes the dense Choi tensor.
    #[arg(long)]
    materialize: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            format: self.format,
            seed: self.seed,
            paper_scale: self.paper_scale,
            k: self.k,
            gamma: self.gamma.clone(),
            n: self.n,
            delta: self.delta,
            env_dim: self.env_dim,
            kraus_rank: self.kraus_rank,
            model: self.model,
            channel: self.channel.clone(),
            target: self.target.clone(),
            restarts: self.restarts,
            j_max: self.j_max,
            grid_points: self.grid_points,
            materialize: self.materialize,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (experiment, common) = match cli.command {
        Command::Fig2a(c) => (Experiment::Fig2a, c),
        Command::Fig2b(c) => (Experiment::Fig2b, c),
        Command::Fig3(c) => (Experiment::Fig3, c),
        Command::Reconstruct(c) => (Experiment::Reconstruct, c),
        Command::Measure(c) => (Experiment::Measure, c),
        Command::Build(c) => (Experiment::Build, c),
    };
    let file = match &common.config {
        Some(p) => config::read_file(p)?,
        None => FileConfig::default(),
    };
    let settings = Settings::resolve(experiment, &file, &common.overrides())?;
    let start = Instant::now();
    let written = experiments::run(&settings)?;
    for p in &written {
        println!("{}", p.display());
    }
    eprintln!("{} finished in {:.2}s", experiment.name(), start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
