use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "condpp", version, about = "Conditional Poisson point processes: simulation, distances, Stein bounds")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    /// Flat tables only (bounds grids, verification rows).
    Csv,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SeedArg {
    /// Master seed.
    #[arg(long, env = "CONDPP_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate the conditioned immigration-death chain, one trajectory per line.
    Simulate(SimulateArgs),
    /// Draw configurations from a point-process law, one per line.
    Sample(SampleArgs),
    /// Distances between configurations or between sample sets.
    #[command(subcommand)]
    Distance(DistanceCommand),
    /// Stein factors for one or more (lambda, m) pairs.
    Bounds(BoundsArgs),
    /// Monte Carlo checks against closed forms and bounds.
    Verify(VerifyArgs),
    /// Conditional Bernoulli versus conditional Poisson experiment.
    Bernoulli(BernoulliArgs),
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    /// Horizon.
    #[arg(long)]
    pub t: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// Initial configuration (JSON); default is m evenly spaced points.
    #[arg(long)]
    pub initial: Option<PathBuf>,
    /// Dimension of the unit cube carrying the points.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LawName {
    Poisson,
    Cpoisson,
    Bernoulli,
    Binomial,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub law: LawName,
    /// Total intensity (poisson, cpoisson).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Minimum number of points.
    #[arg(long, default_value_t = 0)]
    pub m: usize,
    /// Number of trials (bernoulli, binomial).
    #[arg(long)]
    pub n: Option<usize>,
    /// Success probability (bernoulli, binomial).
    #[arg(long)]
    pub p: Option<f64>,
    /// Number of configurations.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum DistanceCommand {
    /// Exact distance between two configuration files.
    D1 {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Transport estimate between two JSONL sample files of equal length.
    D2 {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        /// Recorded in the output as the seed that produced the samples.
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    /// One or more intensities, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambda: Vec<f64>,
    /// One or more floors, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub m: Vec<u64>,
    /// Configuration size for the size-dependent bounds.
    #[arg(long)]
    pub xi_size: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Pipeline {
    PSurvival,
    Stein,
    DeltaBounds,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub pipeline: Pipeline,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 10_000)]
    pub replicas: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Survival: base count (default max(m, 1)).
    #[arg(long)]
    pub k: Option<usize>,
    /// Stein and delta-bounds: configuration sizes, comma separated
    /// (defaults: m, m+1, m+3 for stein; m, m+3, m+10 for delta-bounds).
    #[arg(long, value_delimiter = ',')]
    pub xi_size: Option<Vec<usize>>,
    /// Delta-bounds: number of stationary scenarios.
    #[arg(long, default_value_t = 20)]
    pub scenarios: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BernoulliArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
    /// Sample size per side.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Calibration replicas.
    #[arg(long, default_value_t = 20)]
    pub replicas: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}
