//! `mlbalance` — imbalance statistics, oversampler training, synthetic
//! sampling, and before/after evaluation for multi-label datasets.

mod config;
mod load;
mod ops;

use clap::{Parser, Subcommand};
use config::RunArgs;
use mlbalance::aemlo::TrainError;
use mlbalance::dataset::DataError;
use mlbalance::eval::EvalError;
use mlbalance::imbalance::ImbalanceError;
use mlbalance::sampler::SampleError;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "mlbalance",
    version,
    about = "Measure multi-label class imbalance, train an encoder/decoder oversampler,\n\
             generate synthetic minority instances, and evaluate the effect.",
    after_help = "Exit codes: 0 success, 2 input error, 3 training divergence,\n\
                  4 nothing to sample, 5 generation starvation."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Imbalance profile (IRlbl, ImR, MeanIR, CVIR, Card, Den) as JSON.
    Stats(RunArgs),
    /// Train the oversampling model; writes model, loss log, and config.
    Train(RunArgs),
    /// Generate synthetic instances and write the augmented dataset.
    Sample(RunArgs),
    /// Train a classifier on a split and report Macro-F/Macro-AUC/Ranking Loss.
    Eval(RunArgs),
    /// Full comparison: baseline vs sampler-augmented training, same test split.
    Pipeline(RunArgs),
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Train(TrainError),
    Sample(SampleError),
    Eval(EvalError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Train(e) => write!(f, "{e}"),
            CliError::Sample(e) => write!(f, "{e}"),
            CliError::Eval(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Train(TrainError::Diverged { .. }) => 3,
            CliError::Train(_) => 2,
            CliError::Sample(SampleError::NothingToSample(_)) => 4,
            CliError::Sample(SampleError::Starvation { .. }) => 5,
            CliError::Sample(_) => 2,
            CliError::Eval(EvalError::Diverged(_)) => 3,
            CliError::Eval(_) => 2,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ImbalanceError> for CliError {
    fn from(e: ImbalanceError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        CliError::Train(e)
    }
}

impl From<SampleError> for CliError {
    fn from(e: SampleError) -> Self {
        CliError::Sample(e)
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Eval(e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats(args) => ops::stats(&args),
        Command::Train(args) => ops::train(&args),
        Command::Sample(args) => ops::sample(&args),
        Command::Eval(args) => ops::eval(&args),
        Command::Pipeline(args) => ops::pipeline(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code())
        }
    }
}
