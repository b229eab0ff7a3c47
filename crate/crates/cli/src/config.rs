//! Flag / config-file / default resolution. Precedence: command-line flags,
//! then the JSON config file, then built-in defaults. MLBALANCE_SEED
//! overrides only the default seed.

use crate::CliError;
use clap::ValueEnum;
use mlbalance::DatasetFormat;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerChoice {
    Aemlo,
    Mlros,
    Mlrus,
    Mlsmote,
    None,
}

impl std::fmt::Display for SamplerChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SamplerChoice::Aemlo => "aemlo",
            SamplerChoice::Mlros => "mlros",
            SamplerChoice::Mlrus => "mlrus",
            SamplerChoice::Mlsmote => "mlsmote",
            SamplerChoice::None => "none",
        };
        write!(f, "{name}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierChoice {
    Br,
    Mlknn,
}

impl std::fmt::Display for ClassifierChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}",
            match self {
                ClassifierChoice::Br => "br",
                ClassifierChoice::Mlknn => "mlknn",
            }
        )
    }
}

/// Knobs shared by every subcommand. Unset values fall back to the config
/// file, then to defaults.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct RunArgs {
    /// Input dataset path (.arff or .csv).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Label list: MULAN XML file, text file (one name per line), or — for
    /// CSV — the number of trailing label columns.
    #[arg(long)]
    pub labels: Option<String>,
    /// Input format; inferred from the file extension when omitted.
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory (train/sample) or report file (stats/eval/pipeline).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Feature-reconstruction weight in the training objective.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Label-ranking weight in the training objective.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Orthonormality penalty inside the embedding loss.
    #[arg(long)]
    pub lambda_ortho: Option<f64>,
    /// Pairwise-distance preservation weight inside the feature loss.
    #[arg(long)]
    pub lambda_sim: Option<f64>,
    /// Latent dimension (default min(32, labels, batch size)).
    #[arg(long)]
    pub latent_dim: Option<usize>,
    /// Hidden layer width of the encoders (default 512).
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Mini-batch size (default min(64, training rows)).
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Sampling rate: round(p·n) instances are generated.
    #[arg(long)]
    pub p: Option<f64>,
    /// ImR threshold for the minority label set.
    #[arg(long)]
    pub imr_threshold: Option<f64>,
    /// Rejection budget for generation (default 100·num).
    #[arg(long)]
    pub max_attempts: Option<usize>,
    #[arg(long)]
    pub sampler: Option<SamplerChoice>,
    #[arg(long)]
    pub classifier: Option<ClassifierChoice>,
    /// Neighbor count for mlknn and mlsmote.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub val_frac: Option<f64>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Root seed; all randomness derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trained model JSON (sample subcommand).
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// JSON config file; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Config-file counterpart of [`RunArgs`]; every key optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub input: Option<PathBuf>,
    pub labels: Option<String>,
    pub format: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub lambda_ortho: Option<f64>,
    pub lambda_sim: Option<f64>,
    pub latent_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub leaky_slope: Option<f64>,
    pub p: Option<f64>,
    pub imr_threshold: Option<f64>,
    pub max_attempts: Option<usize>,
    pub sampler: Option<SamplerChoice>,
    pub classifier: Option<ClassifierChoice>,
    pub k: Option<usize>,
    pub val_frac: Option<f64>,
    pub test_frac: Option<f64>,
    pub seed: Option<u64>,
    pub model: Option<PathBuf>,
}

/// Every option materialized. Serialized next to training outputs so a run
/// can be replayed from its own config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub input: PathBuf,
    pub labels: Option<String>,
    pub format: String,
    pub alpha: f64,
    pub beta: f64,
    pub lambda_ortho: f64,
    pub lambda_sim: f64,
    pub latent_dim: Option<usize>,
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: Option<usize>,
    pub lr: f64,
    pub leaky_slope: f64,
    pub p: f64,
    pub imr_threshold: f64,
    pub max_attempts: Option<usize>,
    pub sampler: SamplerChoice,
    pub classifier: ClassifierChoice,
    pub k: usize,
    pub val_frac: f64,
    pub test_frac: f64,
    pub seed: u64,
    pub model: Option<PathBuf>,
}

fn infer_format(path: &Path) -> Option<DatasetFormat> {
    match path.extension()?.to_str()? {
        ext if ext.eq_ignore_ascii_case("arff") => Some(DatasetFormat::Arff),
        ext if ext.eq_ignore_ascii_case("csv") => Some(DatasetFormat::Csv),
        _ => None,
    }
}

impl ResolvedConfig {
    pub fn format(&self) -> Result<DatasetFormat, CliError> {
        self.format
            .parse()
            .map_err(|e: String| CliError::Input(format!("invalid format: {e}")))
    }

    /// Merge flags over the config file over defaults.
    pub fn resolve(args: &RunArgs) -> Result<Self, CliError> {
        let file: FileConfig = match &args.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Input(format!("cannot read config {}: {e}", path.display()))
                })?;
                serde_json::from_str(&text).map_err(|e| {
                    CliError::Input(format!("invalid config {}: {e}", path.display()))
                })?
            }
            None => FileConfig::default(),
        };
        let input = args
            .input
            .clone()
            .or(file.input)
            .ok_or_else(|| CliError::Input("--input is required".into()))?;
        let format = match args.format.clone().or(file.format) {
            Some(text) => {
                // validate eagerly so bad values fail before any work
                let parsed: DatasetFormat = text
                    .parse()
                    .map_err(|e: String| CliError::Input(format!("invalid --format: {e}")))?;
                parsed.to_string()
            }
            None => infer_format(&input)
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "cannot infer format of {}; pass --format arff|csv",
                        input.display()
                    ))
                })?
                .to_string(),
        };
        let env_seed = std::env::var("MLBALANCE_SEED")
            .ok()
            .map(|text| {
                text.parse::<u64>().map_err(|_| {
                    CliError::Input(format!("MLBALANCE_SEED must be an integer, got '{text}'"))
                })
            })
            .transpose()?;
        let default_settings = mlbalance::aemlo::TrainSettings::default();
        Ok(ResolvedConfig {
            input,
            labels: args.labels.clone().or(file.labels),
            format,
            alpha: args.alpha.or(file.alpha).unwrap_or(default_settings.alpha),
            beta: args.beta.or(file.beta).unwrap_or(default_settings.beta),
            lambda_ortho: args
                .lambda_ortho
                .or(file.lambda_ortho)
                .unwrap_or(default_settings.lambda_ortho),
            lambda_sim: args
                .lambda_sim
                .or(file.lambda_sim)
                .unwrap_or(default_settings.lambda_sim),
            latent_dim: args.latent_dim.or(file.latent_dim),
            hidden_dim: args
                .hidden_dim
                .or(file.hidden_dim)
                .unwrap_or(default_settings.hidden_dim),
            epochs: args.epochs.or(file.epochs).unwrap_or(default_settings.epochs),
            batch_size: args.batch_size.or(file.batch_size),
            lr: args.lr.or(file.lr).unwrap_or(default_settings.lr),
            leaky_slope: file.leaky_slope.unwrap_or(default_settings.leaky_slope),
            p: args.p.or(file.p).unwrap_or(0.3),
            imr_threshold: args.imr_threshold.or(file.imr_threshold).unwrap_or(10.0),
            max_attempts: args.max_attempts.or(file.max_attempts),
            sampler: args.sampler.or(file.sampler).unwrap_or(SamplerChoice::Aemlo),
            classifier: args
                .classifier
                .or(file.classifier)
                .unwrap_or(ClassifierChoice::Br),
            k: args.k.or(file.k).unwrap_or(10),
            val_frac: args.val_frac.or(file.val_frac).unwrap_or(0.2),
            test_frac: args.test_frac.or(file.test_frac).unwrap_or(0.0),
            seed: args.seed.or(file.seed).or(env_seed).unwrap_or(42),
            model: args.model.clone().or(file.model),
        })
    }

    pub fn train_settings(&self) -> mlbalance::aemlo::TrainSettings {
        mlbalance::aemlo::TrainSettings {
            alpha: self.alpha,
            beta: self.beta,
            lambda_ortho: self.lambda_ortho,
            lambda_sim: self.lambda_sim,
            latent_dim: self.latent_dim,
            hidden_dim: self.hidden_dim,
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            leaky_slope: self.leaky_slope,
            seed: self.seed,
        }
    }
}
