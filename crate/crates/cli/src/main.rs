use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use icboost::{Error, GrowthMode, LossKind};

mod commands;

#[derive(Parser, Debug)]
#[command(
    name = "icboost",
    version,
    about = "Gradient tree boosting with information-criterion stopping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a model and write it to a model file.
    Train(TrainArgs),
    /// Predict with a saved model.
    Predict(PredictArgs),
    /// Kolmogorov-Smirnov check of a model on labeled data.
    Validate(ValidateArgs),
    /// Per-feature importance with respect to generalization loss.
    Importance(ImportanceArgs),
    /// Compare the vanilla and global-subset algorithms.
    Benchmark(BenchmarkArgs),
}

#[derive(Args, Debug, Clone)]
pub struct TrainingFlags {
    /// Loss function: mse, logloss, gamma::neginv, gamma::log, poisson or negbinom.
    #[arg(long, value_parser = parse_loss)]
    pub loss: LossKind,
    /// Dispersion of the negative binomial loss (required for negbinom only).
    #[arg(long)]
    pub dispersion: Option<f64>,
    /// Learning rate δ in (0, 1].
    #[arg(long, default_value_t = icboost::ensemble::DEFAULT_LEARNING_RATE)]
    pub learning_rate: f64,
    #[arg(long, value_enum, default_value_t = Algorithm::GlobalSubset)]
    pub algorithm: Algorithm,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo replicates for the split optimism.
    #[arg(long, default_value_t = icboost::criterion::DEFAULT_N_SIM)]
    pub nsim: usize,
    #[arg(long, default_value_t = icboost::ensemble::DEFAULT_MAX_ITERATIONS)]
    pub max_iterations: usize,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Training CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Print progress at the first and every N-th iteration (0 = silent).
    #[arg(long, default_value_t = 0)]
    pub verbose: usize,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-iteration training log CSV.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Response column to drop from the input, if present.
    #[arg(long)]
    pub target: Option<String>,
    /// Apply the inverse link.
    #[arg(long)]
    pub response_scale: bool,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Seed of the randomization used for discrete responses.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Write 20-bin histogram counts of the transformed responses to this CSV.
    #[arg(long)]
    pub hist: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ImportanceArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// File with one feature name per line, overriding the names in the model.
    #[arg(long)]
    pub names: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Training CSV; omit to use the built-in synthetic generator.
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Test CSV.
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
    #[arg(long, default_value = "y")]
    pub target: String,
    /// Training rows of the synthetic generator.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Test rows of the synthetic generator.
    #[arg(long, default_value_t = 10_000)]
    pub n_test: usize,
    /// Features of the synthetic generator.
    #[arg(long, default_value_t = 5)]
    pub features: usize,
    /// Report AUC (logloss only).
    #[arg(long)]
    pub auc: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Vanilla,
    GlobalSubset,
}

impl From<Algorithm> for GrowthMode {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Vanilla => GrowthMode::Vanilla,
            Algorithm::GlobalSubset => GrowthMode::GlobalSubset,
        }
    }
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> u8 {
    match err {
        _ if err.is_numerical() => 4,
        Error::Config(_) => 2,
        Error::Io(_) => 5,
        Error::Training { source, .. } => exit_code(source),
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Validate(a) => commands::validate(a),
        Command::Importance(a) => commands::importance(a),
        Command::Benchmark(a) => commands::benchmark(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
