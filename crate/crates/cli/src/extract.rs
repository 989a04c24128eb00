//! Batch feature extraction: per image, locate the signal region (or apply
//! a fixed crop), crop, optionally zero non-pressure colors, and compute the
//! descriptor. Samples are processed in parallel but results keep manifest
//! order, and per-sample failures are collected instead of aborting the
//! batch — the whole batch fails only if nothing succeeds.

use std::path::{Path, PathBuf};

use manovigor::colormask::{apply_mask, build_mask};
use manovigor::hog::compute_descriptor;
use manovigor::ingest::{load_image, LabeledSample};
use manovigor::roi::{crop, detect_roi_padded, CropBox, RoiError};
use manovigor::svm::FeatureMatrix;
use manovigor::RasterImage;
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::CliError;

/// Per-invocation extraction settings beyond the pipeline configuration.
#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    /// Fixed crop box; when absent the region is detected per image.
    pub crop: Option<CropBox>,
    /// Worker thread count; `None` uses the default pool.
    pub jobs: Option<usize>,
    /// When set, the color mask of every cropped sample is written here as
    /// a 1-bit PNG (FE runs only).
    pub mask_dir: Option<PathBuf>,
}

/// Result of a batch extraction.
#[derive(Debug)]
pub struct ExtractOutcome {
    /// Manifest row index (0-based over the sample list) of each feature row.
    pub rows: Vec<u32>,
    pub features: FeatureMatrix,
    /// Class id per feature row, aligned with `rows`.
    pub labels: Vec<u16>,
    /// Samples that failed, with their error messages, in manifest order.
    pub failures: Vec<(PathBuf, String)>,
}

/// Computes one sample's descriptor values: detect-or-fixed crop, then mask
/// (when FE is enabled), then describe. Region detection falling out with
/// "no signal" is not an error — featureless images legitimately occur in
/// the failed class — and is resolved by taking the full frame.
pub fn extract_single(
    image: &RasterImage,
    config: &PipelineConfig,
    fixed_crop: Option<CropBox>,
) -> Result<Vec<f64>, CliError> {
    let (_, descriptor) = extract_single_with_mask(image, config, fixed_crop, None)?;
    Ok(descriptor)
}

fn extract_single_with_mask(
    image: &RasterImage,
    config: &PipelineConfig,
    fixed_crop: Option<CropBox>,
    mask_out: Option<&Path>,
) -> Result<(CropBox, Vec<f64>), CliError> {
    let crop_box = match fixed_crop {
        Some(cb) => cb,
        None => {
            match detect_roi_padded(image, &config.colors, config.roi_threshold, config.roi_padding)
            {
                Ok(cb) => cb,
                Err(RoiError::NoSignal) => CropBox::full(image),
                Err(e) => return Err(e.into()),
            }
        }
    };
    let cropped = crop(image, crop_box)?;
    let prepared = if config.fe_enabled {
        let mask = build_mask(&cropped, &config.colors);
        if let Some(path) = mask_out {
            mask.save_png(path)
                .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        }
        apply_mask(&cropped, &mask)?
    } else {
        cropped
    };
    Ok((crop_box, compute_descriptor(&prepared, &config.hog)?.values))
}

fn mask_path(dir: &Path, sample_path: &Path, index: usize) -> PathBuf {
    let stem = sample_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| format!("sample{index}"));
    dir.join(format!("{stem}_mask.png"))
}

/// Extracts descriptors for every sample, in parallel, preserving manifest
/// order. Returns [`CliError::AllSamplesFailed`] only when no sample
/// survives.
pub fn extract_features(
    samples: &[LabeledSample],
    config: &PipelineConfig,
    options: &ExtractOptions,
) -> Result<ExtractOutcome, CliError> {
    if samples.is_empty() {
        return Err(CliError::Usage("no samples to extract".into()));
    }
    if let Some(dir) = &options.mask_dir {
        std::fs::create_dir_all(dir)
            .map_err(|source| CliError::Io { path: dir.clone(), source })?;
    }

    let run = || -> Vec<Result<Vec<f64>, String>> {
        samples
            .par_iter()
            .enumerate()
            .map(|(index, sample)| {
                let image = load_image(&sample.path).map_err(|e| e.to_string())?;
                let mask_out = options
                    .mask_dir
                    .as_deref()
                    .filter(|_| config.fe_enabled)
                    .map(|dir| mask_path(dir, &sample.path, index));
                extract_single_with_mask(&image, config, options.crop, mask_out.as_deref())
                    .map(|(_, values)| values)
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    let results = match options.jobs {
        Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot build a {n}-thread pool: {e}")))?
            .install(run),
        None => run(),
    };

    let mut rows = Vec::new();
    let mut feature_rows = Vec::new();
    let mut labels = Vec::new();
    let mut failures = Vec::new();
    for (index, (sample, result)) in samples.iter().zip(results).enumerate() {
        match result {
            Ok(values) => {
                rows.push(index as u32);
                feature_rows.push(values);
                labels.push(sample.label.id());
            }
            Err(message) => failures.push((sample.path.clone(), message)),
        }
    }
    if rows.is_empty() {
        return Err(CliError::AllSamplesFailed(samples.len()));
    }
    Ok(ExtractOutcome {
        rows,
        features: FeatureMatrix::from_rows(&feature_rows)?,
        labels,
        failures,
    })
}
