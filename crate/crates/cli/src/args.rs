use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const THREADS_ENV: &str = "SCHOENSDR_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "schoensdr",
    version,
    about = "Kernel sufficient dimension reduction and Schoenberg kernel checks"
)]
pub struct Cli {
    /// Log verbosity (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Base random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    /// Output directory, created if absent.
    #[arg(long, default_value = "schoensdr-out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rerun one of the simulation tables over all six cells.
    Reproduce(ReproduceArgs),
    /// Check whether a kernel belongs to the Schoenberg class.
    KernelCheck(KernelCheckArgs),
    /// Fit one method to a CSV whose last column is the response.
    Fit(FitArgs),
    /// Apply a saved model to new predictors.
    Predict(PredictArgs),
    /// Run a single simulation cell.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// 2 for fixed zeta = 0.2, 3 for GCV tuning.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub table: u8,
    /// Replications per cell.
    #[arg(long, default_value_t = 100)]
    pub reps: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct KernelCheckArgs {
    /// `family(name=value,...)`, `poly1` or `mixture:path`.
    pub spec: String,
    /// Dimensions for the PSD sweep, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Points per Gram matrix.
    #[arg(long)]
    pub n: Option<usize>,
    /// Gram matrices per dimension.
    #[arg(long)]
    pub draws: Option<usize>,
    /// Derivative order for the complete monotonicity screen.
    #[arg(long)]
    pub cm_order: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TuningMode {
    Fixed,
    Gcv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Sir,
    Ksir,
    Kcca,
    Gsir,
}

impl From<MethodArg> for schoensdr::SdrKind {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Sir => schoensdr::SdrKind::Sir,
            MethodArg::Ksir => schoensdr::SdrKind::Ksir,
            MethodArg::Kcca => schoensdr::SdrKind::Kcca,
            MethodArg::Gsir => schoensdr::SdrKind::Gsir,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row; the last column is the response.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Sir)]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value_t = TuningMode::Fixed)]
    pub tuning: TuningMode,
    /// Zeta for both X and Y under fixed tuning.
    #[arg(long, default_value_t = 0.2)]
    pub zeta: f64,
    /// Number of slices.
    #[arg(long, default_value_t = 10)]
    pub slices: usize,
    /// Number of directions.
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    /// Variance fraction kept by KSIR's kernel principal components.
    #[arg(long, default_value_t = schoensdr::sdr::KSIR_VAR_THRESHOLD)]
    pub var_threshold: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model file written by `fit`.
    #[arg(long)]
    pub model: PathBuf,
    /// CSV of predictors with a header row.
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// S1 or S2.
    #[arg(long)]
    pub setting: Option<String>,
    /// V1, V2 or V3.
    #[arg(long)]
    pub covariates: Option<String>,
    #[arg(long, value_enum)]
    pub tuning: Option<TuningMode>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Overrides the config seed when given.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, default_value = "schoensdr-out")]
    pub out: PathBuf,
}
