use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

mod commands;

/// Lebesgue–Stieltjes convolutions, branching random walk simulation and
/// limit-theorem checks.
#[derive(Debug, Parser)]
#[command(name = "lsconv", version, about)]
struct Cli {
    /// Worker threads for replica-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convolution power of a step function, or the product of two.
    Convolve(ConvolveArgs),
    /// Simulate generation-j counts of a coupled or decoupled branching random walk.
    Simulate(SimulateArgs),
    /// Sample one limit-process path on a grid.
    LimitPath(LimitPathArgs),
    /// Run a verification experiment from a JSON config.
    Verify(VerifyArgs),
}

#[derive(Debug, clap::Args)]
struct ConvolveArgs {
    /// Step function CSV (`position,weight`).
    #[arg(long)]
    input: PathBuf,
    /// Second operand; the output is `input * with` instead of a power.
    #[arg(long = "with")]
    with: Option<PathBuf>,
    /// Convolution power of the input.
    #[arg(long, default_value_t = 1)]
    fold: u32,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    out: PathBuf,
    /// Maximum number of atoms in any intermediate result.
    #[arg(long)]
    atom_cap: Option<usize>,
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["coupled", "decoupled"])))]
struct SimulateArgs {
    /// Walk spec JSON (`xi`, `eta`, optional `eta_equals_xi`).
    #[arg(long)]
    walk: PathBuf,
    #[arg(long)]
    horizon: f64,
    /// Generation j to record.
    #[arg(long, default_value_t = 1)]
    generations: u32,
    /// Convolution powers of a single walk.
    #[arg(long)]
    coupled: bool,
    /// Independent walks for every individual.
    #[arg(long)]
    decoupled: bool,
    #[arg(long, default_value_t = 1)]
    replicas: u64,
    #[arg(long)]
    seed: u64,
    /// Output directory for `replica_NNNNNN.csv` files and `manifest.json`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    atom_cap: Option<usize>,
    #[arg(long)]
    population_cap: Option<usize>,
    #[arg(long)]
    point_cap: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PathKind {
    Brownian,
    RiemannLiouville,
    #[value(name = "w-j")]
    WJ,
    InverseStable,
}

#[derive(Debug, clap::Args)]
struct LimitPathArgs {
    #[arg(long, value_enum)]
    kind: PathKind,
    #[arg(long)]
    dt: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    seed: u64,
    /// Index of the path among those generated from the same seed.
    #[arg(long, default_value_t = 0)]
    replica: u64,
    /// Riemann–Liouville order.
    #[arg(long)]
    q: Option<f64>,
    /// Power index for `w-j`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Generation for `w-j`.
    #[arg(long)]
    j: Option<u32>,
    /// Stability index for `inverse-stable`.
    #[arg(long)]
    beta: Option<f64>,
    /// Subordinator time step for `inverse-stable`.
    #[arg(long, default_value_t = 1e-4)]
    dt_v: f64,
    /// Output file; `.json` selects JSON, anything else CSV (`t,value`).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report JSON; a CSV table is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { 0 });
        }
    };
    match commands::dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
