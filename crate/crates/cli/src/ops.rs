//! The five subcommands: stats, train, sample, eval, pipeline.

use crate::config::{ClassifierChoice, ResolvedConfig, RunArgs, SamplerChoice};
use crate::load;
use crate::CliError;
use mlbalance::aemlo::{self, AemloModel, TrainOutcome};
use mlbalance::csvio::write_dataset;
use mlbalance::dataset::{normalize_features, split, DatasetSplit, MultiLabelDataset};
use mlbalance::eval::{
    evaluate, train_br, train_mlknn, BrConfig, EvalReport, MlknnConfig, MultiLabelClassifier,
};
use mlbalance::imbalance::{compute_profile, minority_labels};
use mlbalance::sampler::{self, GenerationReport, SamplingConfig};
use mlbalance::seeds::derive_seed;
use serde::Serialize;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::time::Instant;

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn ensure_out_dir(config_out: Option<&PathBuf>) -> Result<&Path, CliError> {
    let dir = config_out
        .ok_or_else(|| CliError::Input("--out directory is required".into()))?;
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, content)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// stats
// ---------------------------------------------------------------------------

pub fn stats(args: &RunArgs) -> Result<(), CliError> {
    let config = ResolvedConfig::resolve(args)?;
    let dataset = load::load_dataset(&config)?;
    let profile = compute_profile(&dataset)?;
    for &j in &profile.zero_support_labels {
        eprintln!(
            "warning: label '{}' has no positive instance; excluded from MeanIR/CVIR",
            dataset.label_names()[j]
        );
    }
    let minority = minority_labels(&profile, config.imr_threshold);
    let name_of = |j: &usize| dataset.label_names()[*j].clone();
    let per_label: Vec<_> = (0..dataset.num_labels())
        .map(|j| {
            json!({
                "name": dataset.label_names()[j],
                "n1": profile.positives[j],
                "irlbl": profile.irlbl[j],
                "imr": profile.imr[j],
            })
        })
        .collect();
    let report = json!({
        "n": dataset.num_instances(),
        "d": dataset.num_features(),
        "q": dataset.num_labels(),
        "card": profile.card,
        "den": profile.den,
        "mean_ir": profile.mean_ir,
        "cvir": profile.cvir,
        "imr_threshold": config.imr_threshold,
        "per_label": per_label,
        "minority_labels": minority.iter().map(name_of).collect::<Vec<_>>(),
        "zero_support_labels": profile.zero_support_labels.iter().map(name_of).collect::<Vec<_>>(),
    });
    write_output(args.out.as_ref(), &serde_json::to_string_pretty(&report).unwrap())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn loss_log_csv(outcome: &TrainOutcome) -> String {
    let mut csv = String::from("epoch,phi,psi,gamma,total,mean_val_f1\n");
    for row in &outcome.log {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.epoch, row.phi, row.psi, row.gamma, row.total, row.mean_val_f1
        ));
    }
    csv
}

fn train_model(
    config: &ResolvedConfig,
    dataset: &MultiLabelDataset,
) -> Result<(TrainOutcome, DatasetSplit), CliError> {
    let parts = split(
        dataset,
        config.val_frac,
        0.0,
        derive_seed(config.seed, "split"),
    )?;
    let (train_norm, scaler) = normalize_features(&parts.train);
    let val_norm = scaler.transform(&parts.validation)?;
    let outcome = aemlo::train(&train_norm, &val_norm, scaler, &config.train_settings())?;
    Ok((outcome, parts))
}

pub fn train(args: &RunArgs) -> Result<(), CliError> {
    let config = ResolvedConfig::resolve(args)?;
    let dataset = load::load_dataset(&config)?;
    let out_dir = ensure_out_dir(args.out.as_ref())?;
    let (outcome, _) = train_model(&config, &dataset)?;
    write_file(out_dir, "model.json", &outcome.model.to_json())?;
    write_file(out_dir, "loss_log.csv", &loss_log_csv(&outcome))?;
    // materialize the data-dependent defaults for exact replay
    let mut replay = config.clone();
    replay.latent_dim = Some(outcome.model.config.latent_dim);
    replay.batch_size = Some(outcome.model.config.batch_size);
    write_file(
        out_dir,
        "resolved_config.json",
        &serde_json::to_string_pretty(&replay).unwrap(),
    )?;
    eprintln!(
        "trained {} epochs; final loss {:.6}; outputs in {}",
        outcome.log.len(),
        outcome.log.last().map_or(f64::NAN, |r| r.total),
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// sample
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct Provenance<'a> {
    method: String,
    p: f64,
    num: usize,
    accepted: usize,
    rejected_all_zero: usize,
    removed: usize,
    seed: u64,
    minority_labels: Vec<&'a str>,
    warnings: Vec<String>,
}

pub fn sample(args: &RunArgs) -> Result<(), CliError> {
    let config = ResolvedConfig::resolve(args)?;
    let dataset = load::load_dataset(&config)?;
    let out_dir = ensure_out_dir(args.out.as_ref())?;
    let sampler_seed = derive_seed(config.seed, "sampler");
    let n = dataset.num_instances();
    let num_target = (config.p * n as f64).round() as usize;

    let profile = compute_profile(&dataset)?;
    let minority = minority_labels(&profile, config.imr_threshold);
    let minority_names: Vec<&str> = minority
        .iter()
        .map(|&j| dataset.label_names()[j].as_str())
        .collect();

    let (augmented, provenance) = match config.sampler {
        SamplerChoice::Aemlo => {
            let model_path = config
                .model
                .as_ref()
                .ok_or_else(|| CliError::Input("--model is required for the aemlo sampler".into()))?;
            let text = std::fs::read_to_string(model_path).map_err(|e| {
                CliError::Input(format!("cannot read model {}: {e}", model_path.display()))
            })?;
            let model = AemloModel::from_json(&text)
                .map_err(|e| CliError::Input(format!("invalid model JSON: {e}")))?;
            let sampling = SamplingConfig {
                p: config.p,
                imr_threshold: config.imr_threshold,
                max_attempts: config.max_attempts,
                seed: sampler_seed,
            };
            let report: GenerationReport = sampler::generate(&model, &dataset, &sampling)?;
            let augmented = sampler::augment(&dataset, &report.instances)?;
            let provenance = Provenance {
                method: "aemlo".into(),
                p: config.p,
                num: num_target,
                accepted: report.instances.len(),
                rejected_all_zero: report.rejected_all_zero,
                removed: 0,
                seed: config.seed,
                minority_labels: minority_names,
                warnings: Vec::new(),
            };
            (augmented, provenance)
        }
        SamplerChoice::Mlros => {
            let out = sampler::mlros(&dataset, config.p, config.imr_threshold, sampler_seed)?;
            let accepted = out.dataset.num_instances() - n;
            let provenance = Provenance {
                method: "mlros".into(),
                p: config.p,
                num: num_target,
                accepted,
                rejected_all_zero: 0,
                removed: 0,
                seed: config.seed,
                minority_labels: minority_names,
                warnings: out.warnings.clone(),
            };
            (out.dataset, provenance)
        }
        SamplerChoice::Mlrus => {
            let out = sampler::mlrus(&dataset, config.p, config.imr_threshold, sampler_seed)?;
            let removed = n - out.dataset.num_instances();
            let provenance = Provenance {
                method: "mlrus".into(),
                p: config.p,
                num: num_target,
                accepted: 0,
                rejected_all_zero: 0,
                removed,
                seed: config.seed,
                minority_labels: minority_names,
                warnings: out.warnings.clone(),
            };
            (out.dataset, provenance)
        }
        SamplerChoice::Mlsmote => {
            let out = sampler::mlsmote(&dataset, config.k, config.imr_threshold, sampler_seed)?;
            let accepted = out.dataset.num_instances() - n;
            let provenance = Provenance {
                method: "mlsmote".into(),
                p: config.p,
                num: accepted,
                accepted,
                rejected_all_zero: 0,
                removed: 0,
                seed: config.seed,
                minority_labels: minority_names,
                warnings: out.warnings.clone(),
            };
            (out.dataset, provenance)
        }
        SamplerChoice::None => {
            let provenance = Provenance {
                method: "none".into(),
                p: config.p,
                num: 0,
                accepted: 0,
                rejected_all_zero: 0,
                removed: 0,
                seed: config.seed,
                minority_labels: minority_names,
                warnings: vec!["sampler=none copies the input unchanged".into()],
            };
            (dataset.clone(), provenance)
        }
    };
    for warning in &provenance.warnings {
        eprintln!("warning: {warning}");
    }
    let format = config.format()?;
    write_file(
        out_dir,
        &format!("augmented.{format}"),
        &write_dataset(&augmented, format),
    )?;
    write_file(
        out_dir,
        "provenance.json",
        &serde_json::to_string_pretty(&provenance).unwrap(),
    )?;
    eprintln!(
        "wrote {} instances ({} original) to {}",
        augmented.num_instances(),
        n,
        out_dir.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

fn train_classifier(
    choice: ClassifierChoice,
    train_set: &MultiLabelDataset,
    k: usize,
    seed: u64,
) -> Result<Box<dyn MultiLabelClassifier>, CliError> {
    match choice {
        ClassifierChoice::Br => {
            let cfg = BrConfig {
                seed: derive_seed(seed, "classifier"),
                ..BrConfig::default()
            };
            Ok(Box::new(train_br(train_set, &cfg)?))
        }
        ClassifierChoice::Mlknn => {
            let cfg = MlknnConfig { k, smoothing: 1.0 };
            Ok(Box::new(train_mlknn(train_set, &cfg)?))
        }
    }
}

pub fn eval(args: &RunArgs) -> Result<(), CliError> {
    let config = ResolvedConfig::resolve(args)?;
    if config.test_frac <= 0.0 {
        return Err(CliError::Input(
            "--test-frac must be positive for eval".into(),
        ));
    }
    let dataset = load::load_dataset(&config)?;
    let parts = split(
        &dataset,
        config.val_frac,
        config.test_frac,
        derive_seed(config.seed, "split"),
    )?;
    let test = parts.test.as_ref().expect("test_frac > 0 yields a test split");
    let classifier = train_classifier(config.classifier, &parts.train, config.k, config.seed)?;
    let report = evaluate(classifier.as_ref(), test)?;
    write_output(args.out.as_ref(), &serde_json::to_string_pretty(&report).unwrap())
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

#[derive(Serialize, Default)]
struct StageClock {
    parse: f64,
    split: f64,
    normalize: f64,
    train_sampler: f64,
    generate: f64,
    train_baseline: f64,
    train_augmented: f64,
    evaluate: f64,
}

fn rows_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y)
}

pub fn pipeline(args: &RunArgs) -> Result<(), CliError> {
    let config = ResolvedConfig::resolve(args)?;
    if config.test_frac <= 0.0 {
        return Err(CliError::Input(
            "--test-frac must be positive for pipeline".into(),
        ));
    }
    let mut clock = StageClock::default();
    let mut warnings: Vec<String> = Vec::new();

    let started = Instant::now();
    let dataset = load::load_dataset(&config)?;
    clock.parse = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let parts = split(
        &dataset,
        config.val_frac,
        config.test_frac,
        derive_seed(config.seed, "split"),
    )?;
    clock.split = started.elapsed().as_secs_f64();
    let test = parts.test.as_ref().expect("test_frac > 0 yields a test split");

    // synthetic rows appended beyond the original training rows
    let mut synthetic_rows: Vec<Vec<f64>> = Vec::new();
    let mut num_synthetic = 0usize;
    let mut rejected_all_zero = 0usize;

    let augmented_train: MultiLabelDataset = match config.sampler {
        SamplerChoice::None => parts.train.clone(),
        SamplerChoice::Aemlo => {
            let started = Instant::now();
            let (train_norm, scaler) = normalize_features(&parts.train);
            let val_norm = scaler.transform(&parts.validation)?;
            clock.normalize = started.elapsed().as_secs_f64();

            let started = Instant::now();
            let outcome = aemlo::train(&train_norm, &val_norm, scaler, &config.train_settings())?;
            clock.train_sampler = started.elapsed().as_secs_f64();

            let started = Instant::now();
            let sampling = SamplingConfig {
                p: config.p,
                imr_threshold: config.imr_threshold,
                max_attempts: config.max_attempts,
                seed: derive_seed(config.seed, "sampler"),
            };
            let report = sampler::generate(&outcome.model, &parts.train, &sampling)?;
            clock.generate = started.elapsed().as_secs_f64();
            num_synthetic = report.instances.len();
            rejected_all_zero = report.rejected_all_zero;
            synthetic_rows = report.instances.iter().map(|s| s.features.clone()).collect();
            sampler::augment(&parts.train, &report.instances)?
        }
        SamplerChoice::Mlros | SamplerChoice::Mlrus | SamplerChoice::Mlsmote => {
            let started = Instant::now();
            let seed = derive_seed(config.seed, "sampler");
            let out = match config.sampler {
                SamplerChoice::Mlros => {
                    sampler::mlros(&parts.train, config.p, config.imr_threshold, seed)?
                }
                SamplerChoice::Mlrus => {
                    sampler::mlrus(&parts.train, config.p, config.imr_threshold, seed)?
                }
                _ => sampler::mlsmote(&parts.train, config.k, config.imr_threshold, seed)?,
            };
            clock.train_sampler = started.elapsed().as_secs_f64();
            warnings.extend(out.warnings);
            let n_train = parts.train.num_instances();
            if out.dataset.num_instances() > n_train {
                num_synthetic = out.dataset.num_instances() - n_train;
                synthetic_rows = (n_train..out.dataset.num_instances())
                    .map(|i| out.dataset.feature_row(i).to_vec())
                    .collect();
            }
            out.dataset
        }
    };

    let started = Instant::now();
    let baseline_model =
        train_classifier(config.classifier, &parts.train, config.k, config.seed)?;
    clock.train_baseline = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let augmented_model =
        train_classifier(config.classifier, &augmented_train, config.k, config.seed)?;
    clock.train_augmented = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let baseline: EvalReport = evaluate(baseline_model.as_ref(), test)?;
    let augmented: EvalReport = evaluate(augmented_model.as_ref(), test)?;
    clock.evaluate = started.elapsed().as_secs_f64();

    // leakage audit: no synthetic row may appear in the held-out splits
    let count_leaks = |part: &MultiLabelDataset| -> usize {
        synthetic_rows
            .iter()
            .filter(|row| {
                (0..part.num_instances()).any(|i| rows_match(part.feature_row(i), row))
            })
            .count()
    };
    let leaks_validation = count_leaks(&parts.validation);
    let leaks_test = count_leaks(test);

    let report = json!({
        "sampler": config.sampler,
        "classifier": config.classifier,
        "seed": config.seed,
        "baseline": baseline,
        "augmented": augmented,
        "delta": {
            "macro_f": augmented.macro_f - baseline.macro_f,
            "macro_auc": augmented.macro_auc - baseline.macro_auc,
            "ranking_loss": augmented.ranking_loss - baseline.ranking_loss,
        },
        "augmentation": {
            "num_synthetic": num_synthetic,
            "rejected_all_zero": rejected_all_zero,
            "train_rows_baseline": parts.train.num_instances(),
            "train_rows_augmented": augmented_train.num_instances(),
        },
        "leakage_audit": {
            "synthetic_in_validation": leaks_validation,
            "synthetic_in_test": leaks_test,
        },
        "wall_clock_seconds": clock,
        "warnings": warnings,
    });
    write_output(args.out.as_ref(), &serde_json::to_string_pretty(&report).unwrap())
}
