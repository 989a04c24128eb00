//! Command-line pipeline wiring: configuration loading, parallel feature
//! extraction, and the implementations behind every subcommand of the
//! `manovigor` binary.
//!
//! The binary itself (`main.rs`) only parses arguments and prints; all
//! behavior lives here so the full pipeline is drivable from tests.

use std::io;
use std::path::PathBuf;

use manovigor::colormask::ColorMaskError;
use manovigor::hog::HogError;
use manovigor::ingest::IngestError;
use manovigor::metrics::MetricsError;
use manovigor::roi::RoiError;
use manovigor::svm::SvmError;
use manovigor::synth::SynthError;

pub mod commands;
pub mod config;
pub mod extract;

pub use commands::{
    cmd_evaluate, cmd_extract, cmd_gridsearch, cmd_predict, cmd_synth, cmd_train, EvaluateArgs,
    EvaluateSummary, ExtractSummary, GridsearchSummary, PredictSummary, Subset, SynthArgs,
    TrainSummary,
};
pub use config::{parse_c_list, parse_crop, parse_size, parse_split, Overrides, PipelineConfig};
pub use extract::{extract_features, ExtractOptions, ExtractOutcome};

/// Model-file flag bit recorded when the training descriptors were computed
/// from color-filtered (masked) pixels rather than the raw crop.
pub const FLAG_COLOR_FILTERED: u16 = 1 << 1;

/// Everything a subcommand can fail with. [`CliError::exit_code`] maps the
/// variants onto the documented process exit codes: 1 for usage and
/// configuration mistakes, 2 for data and pipeline failures.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    ColorMask(#[from] ColorMaskError),
    #[error(transparent)]
    Roi(#[from] RoiError),
    #[error(transparent)]
    Hog(#[from] HogError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(
        "descriptor configuration digest {actual:#018x} does not match the model's {expected:#018x}"
    )]
    DigestMismatch { expected: u64, actual: u64 },
    #[error("all {0} samples failed extraction")]
    AllSamplesFailed(usize),
    #[error("accuracy {accuracy:.4} is below the required minimum {minimum:.4}")]
    BelowMinAccuracy { accuracy: f64, minimum: f64 },
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    /// Process exit code for this failure: 1 = usage, 2 = data/pipeline.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } => 1,
            _ => 2,
        }
    }
}
