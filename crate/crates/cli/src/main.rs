//! `equipart`: simulate request streams, solve them, and run the experiments.
//!
//! Exit codes: 0 success, 1 other failure, 2 bad flags or configuration,
//! 3 infeasible or malformed constraints, 4 oracle cap exceeded,
//! 5 a `--assert` (or `replay --verify`) check failed.

mod assertions;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "equipart", version, about = "Constrained on-line equi-partitioning from noisy pair requests")]
pub struct Cli {
    /// Worker threads for ensemble runs (default: available cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a hidden partitioning and a request stream from it.
    Simulate(SimulateArgs),
    /// Infer the partitioning from a stream or counts file.
    Solve(SolveArgs),
    /// Exhaustive MAP search on a small instance.
    Oracle(OracleArgs),
    /// Run a simulated-ensemble experiment from a config file.
    Bench(BenchArgs),
    /// Run the warehouse trip-cost study.
    Warehouse(WarehouseArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub partitions: Option<usize>,
    /// Comma-separated partition sizes, instead of equal sizes.
    #[arg(long, value_delimiter = ',')]
    pub capacities: Option<Vec<usize>>,
    /// Constraint file (`must`, `cannot`, `allow`, `capacity` lines).
    #[arg(long)]
    pub constraints: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SupportArg {
    Full,
    AboveChance,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Which noise values carry prior mass.
    #[arg(long, value_enum, default_value = "above-chance")]
    pub noise_support: SupportArg,
    /// Noise grid resolution (grid has resolution + 1 points).
    #[arg(long, default_value_t = equipart::noise::DEFAULT_RESOLUTION)]
    pub resolution: usize,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct InputArgs {
    /// Request stream CSV (`t,i,j`).
    #[arg(long)]
    pub stream: Option<PathBuf>,
    /// Pair counts CSV (`i,j,n`).
    #[arg(long)]
    pub counts: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Lw,
    Prior,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Probability that a request pairs two objects of the same partition.
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub requests: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Probability of keeping a worse configuration.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Walk steps.
    #[arg(long, default_value_t = 5000)]
    pub steps: usize,
    /// Likelihood-weighted samples per object.
    #[arg(long, default_value_t = 250)]
    pub samples: usize,
    #[arg(long, value_enum, default_value = "lw")]
    pub init: InitArg,
    /// Hold the initial noise estimate fixed during the walk.
    #[arg(long)]
    pub fixed_noise: bool,
    /// Solve exhaustively instead of walking.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = equipart::inference::DEFAULT_ORACLE_CAP)]
    pub oracle_cap: u128,
    /// Write the walk trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Largest number of classes to enumerate.
    #[arg(long, default_value_t = equipart::inference::DEFAULT_ORACLE_CAP)]
    pub cap: u128,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the true noise value.
    #[arg(long)]
    pub p: Option<f64>,
    /// Comma-separated checkpoints.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Check a result, e.g. `bn-epp@10>=0.85` or `oma@50 in 0.9..1`.
    #[arg(long = "assert")]
    pub asserts: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct WarehouseArgs {
    /// Study config (TOML); defaults apply when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Transactions file, one basket per line; the synthetic clone otherwise.
    #[arg(long)]
    pub transactions: Option<PathBuf>,
    /// Constraint file with item and section names.
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub sections: Option<usize>,
    /// Skip the constrained solver.
    #[arg(long)]
    pub no_rules: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Check a result, e.g. `bn-epp.mean<=40`.
    #[arg(long = "assert")]
    pub asserts: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Where to write the replayed outputs (default: a `replay` directory
    /// next to the manifest).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Fail unless every output hash matches the manifest.
    #[arg(long)]
    pub verify: bool,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
