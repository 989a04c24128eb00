//! `manovigor` — train and run contraction-vigor classifiers on
//! pressure-topography plots.
//!
//! Subcommands cover the full workflow: `synth` generates labeled synthetic
//! datasets, `extract` turns a manifest into a descriptor batch, `train`
//! fits and saves a model, `evaluate` renders the per-class report,
//! `predict` classifies one image, and `gridsearch-c` sweeps the
//! regularization constant.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 success with a convergence warning (notice on stderr).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use manovigor_cli::{
    cmd_evaluate, cmd_extract, cmd_gridsearch, cmd_predict, cmd_synth, cmd_train,
    config::{load_config, parse_c_list, parse_crop, parse_size, parse_split},
    CliError, EvaluateArgs, ExtractOptions, Overrides, PipelineConfig, Subset, SynthArgs,
};

#[derive(Parser)]
#[command(
    name = "manovigor",
    version,
    about = "Contraction-vigor classification on pressure-topography plots"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every pipeline subcommand; `synth` has its own set.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Config file with key=value lines (flags override it).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Seed for both the dataset split and the trainer.
    #[arg(long)]
    seed: Option<u64>,
    /// Disable color filtering (plain descriptors).
    #[arg(long)]
    no_fe: bool,
    /// Drop the green range from the keep-list.
    #[arg(long)]
    no_green: bool,
    /// Fixed crop box `x,y,w,h`; skips region detection.
    #[arg(long, value_name = "X,Y,W,H")]
    crop: Option<String>,
    /// Worker threads for batch stages.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Region-detection density threshold in (0, 1].
    #[arg(long, value_name = "T")]
    roi_threshold: Option<f64>,
    /// Region padding as a fraction of the larger image side.
    #[arg(long, value_name = "P")]
    roi_pad: Option<f64>,
    /// Color-range file replacing the built-in keep-list.
    #[arg(long, value_name = "FILE")]
    colors: Option<PathBuf>,
    /// Regularization constant.
    #[arg(long, value_name = "C")]
    c: Option<f64>,
    /// Split ratios `train,validation,test`.
    #[arg(long, value_name = "TR,VA,TE")]
    split: Option<String>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<(PipelineConfig, ExtractOptions), CliError> {
        let overrides = Overrides {
            seed: self.seed,
            no_fe: self.no_fe,
            no_green: self.no_green,
            roi_threshold: self.roi_threshold,
            roi_padding: self.roi_pad,
            c: self.c,
            split: self.split.as_deref().map(parse_split).transpose()?,
            colors_file: self.colors.clone(),
        };
        let config = load_config(self.config.as_deref(), &overrides)?;
        let options = ExtractOptions {
            crop: self.crop.as_deref().map(parse_crop).transpose()?,
            jobs: self.jobs,
            mask_dir: None,
        };
        Ok((config, options))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labeled synthetic dataset.
    Synth {
        /// Output directory for images and manifest.csv.
        out_dir: PathBuf,
        /// Images per class.
        #[arg(long, default_value_t = 10)]
        per_class: usize,
        /// Image size `WxH`.
        #[arg(long, default_value = "128x128")]
        size: String,
        /// Pressure-noise standard deviation.
        #[arg(long, default_value_t = 9.0)]
        noise_sigma: f64,
        /// Pressure value mapped to the top of the color scale.
        #[arg(long, default_value_t = 55.0)]
        p_max: f64,
        /// Cool-colored distractor density (0 disables).
        #[arg(long, default_value_t = 0.0)]
        distractor_level: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Extract descriptors for a whole manifest into a batch file.
    Extract {
        manifest: PathBuf,
        /// Output batch file.
        #[arg(short, long)]
        out: PathBuf,
        /// Directory receiving one mask PNG per sample (FE runs only).
        #[arg(long, value_name = "DIR")]
        mask_dir: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Split a manifest, train a model, and report validation metrics.
    Train {
        manifest: PathBuf,
        /// Output model file.
        #[arg(short, long)]
        out: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Score a model on a manifest subset and render the per-class report.
    Evaluate {
        manifest: PathBuf,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        /// Pre-extracted batch file (skips image processing; whole manifest).
        #[arg(long, value_name = "FILE")]
        features: Option<PathBuf>,
        /// Which split to score: all, train, validation, or test.
        #[arg(long, default_value = "all")]
        subset: Subset,
        /// Fail (exit 2) when accuracy falls below this value.
        #[arg(long, value_name = "A")]
        min_accuracy: Option<f64>,
        /// Write a machine-readable key=value report here.
        #[arg(long, value_name = "FILE")]
        report_out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Classify one image with a trained model.
    Predict {
        image: PathBuf,
        /// Trained model file.
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Sweep the regularization constant on the train/validation splits.
    GridsearchC {
        manifest: PathBuf,
        /// Comma-separated C candidates.
        #[arg(long, default_value = "0.001,0.005,0.025,0.1,0.5,2.5")]
        grid: String,
        /// Save the winning model here.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn print_failures(failures: &[(PathBuf, String)]) {
    for (path, message) in failures {
        eprintln!("warning: {}: {message}", path.display());
    }
}

/// Runs one command; `Ok(true)` means success with a convergence warning.
fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Synth {
            out_dir,
            per_class,
            size,
            noise_sigma,
            p_max,
            distractor_level,
            seed,
        } => {
            let manifest = cmd_synth(&SynthArgs {
                per_class,
                out_dir,
                size: parse_size(&size)?,
                noise_sigma,
                p_max,
                distractor_level,
                seed,
            })?;
            println!("manifest: {}", manifest.display());
            Ok(false)
        }
        Command::Extract { manifest, out, mask_dir, common } => {
            let (config, mut options) = common.resolve()?;
            options.mask_dir = mask_dir;
            let summary = cmd_extract(&manifest, &out, &config, &options)?;
            print_failures(&summary.failures);
            println!(
                "extracted {} descriptors of dimension {} to {}",
                summary.extracted,
                summary.dim,
                summary.output.display()
            );
            Ok(false)
        }
        Command::Train { manifest, out, common } => {
            let (config, options) = common.resolve()?;
            let summary = cmd_train(&manifest, &out, &config, &options)?;
            print_failures(&summary.failures);
            println!(
                "trained on {} samples; model: {}",
                summary.train_size,
                summary.model_path.display()
            );
            if let Some(report) = &summary.validation_report {
                println!("validation ({} samples):", summary.validation_size);
                println!("{report}");
            }
            if let Some(accuracy) = summary.validation_accuracy {
                println!("validation accuracy: {accuracy:.4}");
            }
            if summary.convergence_warning {
                eprintln!("notice: the solver hit its epoch budget before converging");
            }
            Ok(summary.convergence_warning)
        }
        Command::Evaluate {
            manifest,
            model,
            features,
            subset,
            min_accuracy,
            report_out,
            common,
        } => {
            let (config, options) = common.resolve()?;
            let args =
                EvaluateArgs { manifest, model, features, subset, min_accuracy, report_out };
            let summary = cmd_evaluate(&args, &config, &options)?;
            print_failures(&summary.failures);
            println!("{}", summary.rendered);
            println!("accuracy: {:.4} over {} samples", summary.accuracy, summary.evaluated);
            if let Some(path) = &summary.report_path {
                println!("report: {}", path.display());
            }
            Ok(false)
        }
        Command::Predict { image, model, common } => {
            let (config, options) = common.resolve()?;
            let summary = cmd_predict(&image, &model, &config, options.crop)?;
            println!("{}", summary.line());
            Ok(false)
        }
        Command::GridsearchC { manifest, grid, out, common } => {
            let (config, options) = common.resolve()?;
            let c_values = parse_c_list(&grid)?;
            let summary =
                cmd_gridsearch(&manifest, &c_values, out.as_deref(), &config, &options)?;
            for (c, accuracy) in &summary.accuracies {
                println!("C={c}\taccuracy={accuracy:.4}");
            }
            println!("best C: {}", summary.best_c);
            if let Some(path) = &summary.model_path {
                println!("model: {}", path.display());
            }
            if summary.convergence_warning {
                eprintln!("notice: the winning model hit its epoch budget before converging");
            }
            Ok(summary.convergence_warning)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
