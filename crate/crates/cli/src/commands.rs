//! Command implementations. Each `cmd_*` does the work and returns a
//! structured summary; the binary's `main` only parses arguments, calls one
//! of these, and prints. Keeping the logic here makes every command
//! exercisable from tests without spawning processes.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use manovigor::hog::{read_batch, write_batch, DescriptorBatch};
use manovigor::ingest::{load_image, read_manifest, split_dataset, LabeledSample};
use manovigor::metrics::{confusion, render_report, report, report_kv};
use manovigor::roi::CropBox;
use manovigor::svm::{
    grid_search_c, load_model, save_model, train_multiclass, FeatureMatrix, LinearSvmModel,
};
use manovigor::synth::{generate_dataset, SynthConfig};
use manovigor::VigorClass;

use crate::config::PipelineConfig;
use crate::extract::{extract_features, extract_single, ExtractOptions, ExtractOutcome};
use crate::{CliError, FLAG_COLOR_FILTERED};

/// Arguments of the dataset generator command.
#[derive(Debug, Clone)]
pub struct SynthArgs {
    pub per_class: usize,
    pub out_dir: PathBuf,
    pub size: (u32, u32),
    pub noise_sigma: f64,
    pub p_max: f64,
    pub distractor_level: f64,
    pub seed: u64,
}

/// Generates a labeled synthetic dataset; returns the manifest path.
pub fn cmd_synth(args: &SynthArgs) -> Result<PathBuf, CliError> {
    let config = SynthConfig {
        width: args.size.0 as usize,
        height: args.size.1 as usize,
        noise_sigma: args.noise_sigma,
        p_max: args.p_max,
        distractor_level: args.distractor_level,
        seed: args.seed,
        ..SynthConfig::default()
    };
    Ok(generate_dataset(args.per_class, &args.out_dir, &config)?)
}

/// Result of `extract`: where the batch went and what it holds.
#[derive(Debug)]
pub struct ExtractSummary {
    pub output: PathBuf,
    pub extracted: usize,
    pub dim: u32,
    pub failures: Vec<(PathBuf, String)>,
}

/// Extracts descriptors for a whole manifest and writes them as a batch
/// file stamped with the descriptor-config digest.
pub fn cmd_extract(
    manifest: &Path,
    output: &Path,
    config: &PipelineConfig,
    options: &ExtractOptions,
) -> Result<ExtractSummary, CliError> {
    let samples = read_manifest(manifest)?;
    let outcome = extract_features(&samples, config, options)?;
    let dim = config.hog.descriptor_len() as u32;
    let batch = DescriptorBatch {
        dim,
        digest: config.hog.digest(),
        rows: outcome.rows.clone(),
        data: outcome.features.as_slice().iter().map(|&v| v as f32).collect(),
    };
    write_batch(output, &batch)?;
    Ok(ExtractSummary {
        output: output.to_path_buf(),
        extracted: outcome.rows.len(),
        dim,
        failures: outcome.failures,
    })
}

/// Result of `train`: the model file plus the validation-split report.
#[derive(Debug)]
pub struct TrainSummary {
    pub model_path: PathBuf,
    pub train_size: usize,
    pub validation_size: usize,
    /// Rendered validation report; absent when the validation split is empty.
    pub validation_report: Option<String>,
    pub validation_accuracy: Option<f64>,
    pub convergence_warning: bool,
    pub failures: Vec<(PathBuf, String)>,
}

fn class_names(classes: &[u16]) -> Vec<&'static str> {
    classes
        .iter()
        .map(|&id| VigorClass::from_id(id).map_or("unknown", |c| c.name()))
        .collect()
}

fn predict_rows(
    model: &LinearSvmModel,
    features: &FeatureMatrix,
) -> Result<Vec<u16>, CliError> {
    (0..features.rows()).map(|i| Ok(model.predict(features.row(i))?)).collect()
}

/// Splits the manifest, trains on the train subset, writes the model, and
/// reports validation metrics.
pub fn cmd_train(
    manifest: &Path,
    model_out: &Path,
    config: &PipelineConfig,
    options: &ExtractOptions,
) -> Result<TrainSummary, CliError> {
    let samples = read_manifest(manifest)?;
    let split = split_dataset(&samples, config.split.ratios(), config.split.seed)?;
    let train = extract_features(&split.train, config, options)?;
    let mut model = train_multiclass(&train.features, &train.labels, &config.train, &config.hog)?;
    if config.fe_enabled {
        model.flags |= FLAG_COLOR_FILTERED;
    }
    save_model(model_out, &model)?;

    let mut failures = train.failures;
    let (validation_report, validation_accuracy) = if split.validation.is_empty() {
        (None, None)
    } else {
        let validation = extract_features(&split.validation, config, options)?;
        let predicted = predict_rows(&model, &validation.features)?;
        let matrix = confusion(&validation.labels, &predicted, &model.classes)?;
        let class_report = report(&matrix)?;
        let rendered = render_report(&class_report, &class_names(&model.classes))?;
        failures.extend(validation.failures);
        (Some(rendered), Some(class_report.accuracy))
    };

    Ok(TrainSummary {
        model_path: model_out.to_path_buf(),
        train_size: split.train.len(),
        validation_size: split.validation.len(),
        validation_report,
        validation_accuracy,
        convergence_warning: model.convergence_warning(),
        failures,
    })
}

/// Which part of the manifest `evaluate` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subset {
    All,
    Train,
    Validation,
    Test,
}

impl FromStr for Subset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(Subset::All),
            "train" => Ok(Subset::Train),
            "validation" => Ok(Subset::Validation),
            "test" => Ok(Subset::Test),
            _ => Err(format!("unknown subset `{s}` (expected all|train|validation|test)")),
        }
    }
}

/// Arguments of the `evaluate` command.
#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub manifest: PathBuf,
    pub model: PathBuf,
    /// Pre-extracted batch file; skips image processing when given.
    pub features: Option<PathBuf>,
    pub subset: Subset,
    pub min_accuracy: Option<f64>,
    /// Where to write the machine-readable key-value report.
    pub report_out: Option<PathBuf>,
}

/// Result of `evaluate`.
#[derive(Debug)]
pub struct EvaluateSummary {
    /// The fixed-width per-class table.
    pub rendered: String,
    pub accuracy: f64,
    pub evaluated: usize,
    pub failures: Vec<(PathBuf, String)>,
    pub report_path: Option<PathBuf>,
}

/// Resolves the effective pipeline settings against a loaded model: an
/// explicitly configured descriptor geometry must match the model's digest,
/// otherwise the model's own embedded geometry is adopted; likewise the FE
/// toggle defaults to how the model was trained.
fn adopt_model_config(
    config: &PipelineConfig,
    model: &LinearSvmModel,
) -> Result<PipelineConfig, CliError> {
    let mut effective = config.clone();
    if config.hog_explicit() {
        if config.hog.digest() != model.hog_digest() {
            return Err(CliError::DigestMismatch {
                expected: model.hog_digest(),
                actual: config.hog.digest(),
            });
        }
    } else {
        effective.hog = model.hog_config.clone();
    }
    if !config.fe_explicit() {
        effective.fe_enabled = model.flags & FLAG_COLOR_FILTERED != 0;
    }
    Ok(effective)
}

fn subset_samples(
    samples: Vec<LabeledSample>,
    subset: Subset,
    config: &PipelineConfig,
) -> Result<Vec<LabeledSample>, CliError> {
    if subset == Subset::All {
        return Ok(samples);
    }
    let split = split_dataset(&samples, config.split.ratios(), config.split.seed)?;
    Ok(match subset {
        Subset::All => unreachable!(),
        Subset::Train => split.train,
        Subset::Validation => split.validation,
        Subset::Test => split.test,
    })
}

/// Scores a model against a manifest subset (or a pre-extracted batch) and
/// renders the per-class report.
pub fn cmd_evaluate(
    args: &EvaluateArgs,
    config: &PipelineConfig,
    options: &ExtractOptions,
) -> Result<EvaluateSummary, CliError> {
    let model = load_model(&args.model)?;
    let effective = adopt_model_config(config, &model)?;
    let samples = read_manifest(&args.manifest)?;

    let (features, truth, failures) = match &args.features {
        Some(batch_path) => {
            if args.subset != Subset::All {
                return Err(CliError::Usage(
                    "--features holds rows for the whole manifest; subsets require extraction \
                     from images, so drop --features or use --subset all"
                        .into(),
                ));
            }
            let batch = read_batch(batch_path)?;
            if batch.digest != model.hog_digest() {
                return Err(CliError::DigestMismatch {
                    expected: model.hog_digest(),
                    actual: batch.digest,
                });
            }
            let mut truth = Vec::with_capacity(batch.rows.len());
            for &row in &batch.rows {
                let sample = samples.get(row as usize).ok_or_else(|| {
                    CliError::Usage(format!(
                        "batch row {row} is outside the {}-sample manifest — the batch was \
                         extracted from a different manifest",
                        samples.len()
                    ))
                })?;
                truth.push(sample.label.id());
            }
            let data: Vec<Vec<f64>> = batch
                .data
                .chunks(batch.dim as usize)
                .map(|row| row.iter().map(|&v| v as f64).collect())
                .collect();
            (FeatureMatrix::from_rows(&data)?, truth, Vec::new())
        }
        None => {
            let subset = subset_samples(samples, args.subset, &effective)?;
            let outcome: ExtractOutcome = extract_features(&subset, &effective, options)?;
            (outcome.features, outcome.labels, outcome.failures)
        }
    };

    let predicted = predict_rows(&model, &features)?;
    let matrix = confusion(&truth, &predicted, &model.classes)?;
    let class_report = report(&matrix)?;
    let names = class_names(&model.classes);
    let rendered = render_report(&class_report, &names)?;
    let report_path = match &args.report_out {
        Some(path) => {
            let kv = report_kv(&class_report, &names)?;
            std::fs::write(path, kv)
                .map_err(|source| CliError::Io { path: path.clone(), source })?;
            Some(path.clone())
        }
        None => None,
    };

    if let Some(minimum) = args.min_accuracy {
        if class_report.accuracy < minimum {
            return Err(CliError::BelowMinAccuracy {
                accuracy: class_report.accuracy,
                minimum,
            });
        }
    }
    Ok(EvaluateSummary {
        rendered,
        accuracy: class_report.accuracy,
        evaluated: truth.len(),
        failures,
        report_path,
    })
}

/// Result of `predict` on a single image.
#[derive(Debug)]
pub struct PredictSummary {
    pub label: String,
    /// Per-class decision values, in the model's class order.
    pub scores: Vec<f64>,
}

impl PredictSummary {
    /// The single output line: label, a tab, then the scores.
    pub fn line(&self) -> String {
        let scores: Vec<String> = self.scores.iter().map(|s| format!("{s:.6}")).collect();
        format!("{}\t{}", self.label, scores.join(" "))
    }
}

/// Classifies one image with a trained model.
pub fn cmd_predict(
    image_path: &Path,
    model_path: &Path,
    config: &PipelineConfig,
    crop: Option<CropBox>,
) -> Result<PredictSummary, CliError> {
    let model = load_model(model_path)?;
    let effective = adopt_model_config(config, &model)?;
    let image = load_image(image_path)?;
    let descriptor = extract_single(&image, &effective, crop)?;
    let scores = model.decision(&descriptor)?.scores;
    let id = model.predict(&descriptor)?;
    let label = VigorClass::from_id(id).map_or_else(|| id.to_string(), |c| c.name().to_string());
    Ok(PredictSummary { label, scores })
}

/// Result of `gridsearch-c`.
#[derive(Debug)]
pub struct GridsearchSummary {
    pub best_c: f64,
    /// `(c, validation accuracy)` per candidate, ascending in C.
    pub accuracies: Vec<(f64, f64)>,
    pub model_path: Option<PathBuf>,
    pub convergence_warning: bool,
}

/// Sweeps the C grid on the train/validation splits and optionally writes
/// the winning model.
pub fn cmd_gridsearch(
    manifest: &Path,
    c_values: &[f64],
    model_out: Option<&Path>,
    config: &PipelineConfig,
    options: &ExtractOptions,
) -> Result<GridsearchSummary, CliError> {
    let samples = read_manifest(manifest)?;
    let split = split_dataset(&samples, config.split.ratios(), config.split.seed)?;
    if split.validation.is_empty() {
        return Err(CliError::Usage(
            "gridsearch-c needs a non-empty validation split".into(),
        ));
    }
    let train = extract_features(&split.train, config, options)?;
    let validation = extract_features(&split.validation, config, options)?;
    let mut outcome = grid_search_c(
        &train.features,
        &train.labels,
        &validation.features,
        &validation.labels,
        c_values,
        &config.train,
        &config.hog,
    )?;
    if config.fe_enabled {
        outcome.best_model.flags |= FLAG_COLOR_FILTERED;
    }
    let model_path = match model_out {
        Some(path) => {
            save_model(path, &outcome.best_model)?;
            Some(path.to_path_buf())
        }
        None => None,
    };
    Ok(GridsearchSummary {
        best_c: outcome.best_c,
        accuracies: outcome.accuracies,
        model_path,
        convergence_warning: outcome.best_model.convergence_warning(),
    })
}
