//! Dataset ingestion: image decoding, labeled manifests, stratified splits.
//!
//! A dataset is described by a manifest — a small CSV with the exact header
//! `path,label`, one `relative/path.png,label` row per sample, `#` comment
//! lines, blank lines ignored. Paths are resolved relative to the manifest's
//! own directory, so a dataset folder can be moved wholesale.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::raster::RasterImage;
use crate::rng::SplitMix64;

/// Contraction-vigor category of a swallow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VigorClass {
    Normal,
    Weak,
    Failed,
}

impl VigorClass {
    /// The three classes in ascending id order.
    pub const ALL: [VigorClass; 3] = [VigorClass::Normal, VigorClass::Weak, VigorClass::Failed];

    /// Stable numeric id used in feature matrices and model files.
    pub fn id(self) -> u16 {
        match self {
            VigorClass::Normal => 0,
            VigorClass::Weak => 1,
            VigorClass::Failed => 2,
        }
    }

    pub fn from_id(id: u16) -> Option<VigorClass> {
        Self::ALL.into_iter().find(|c| c.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            VigorClass::Normal => "normal",
            VigorClass::Weak => "weak",
            VigorClass::Failed => "failed",
        }
    }

    pub fn from_name(name: &str) -> Option<VigorClass> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for VigorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One manifest row: an image path plus its ground-truth label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSample {
    pub path: PathBuf,
    pub label: VigorClass,
}

/// Output of [`split_dataset`]: disjoint train/validation/test subsets.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledSample>,
    pub validation: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    /// Seed the shuffle was driven by, kept for reproducibility records.
    pub seed: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("file not found: {0}")]
    FileNotFound(PathBuf),
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),
    #[error("corrupt or undecodable image: {0}")]
    CorruptImage(PathBuf),
    #[error("manifest line {0} is malformed")]
    MalformedLine(usize),
    #[error("unknown label {0:?} on manifest line {1}")]
    UnknownLabel(String, usize),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("split ratios must be non-negative and sum to a positive value")]
    InvalidRatios,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Decodes an image file into RGB.
///
/// Any color type the PNG decoder understands is converted to 8-bit RGB;
/// grayscale expands to equal channels, alpha is dropped.
pub fn load_image(path: &Path) -> Result<RasterImage, IngestError> {
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Io { path: path.to_path_buf(), source: e },
    })?;
    let decoded = image::load_from_memory(&bytes).map_err(|e| match e {
        image::ImageError::Unsupported(_) => IngestError::UnsupportedFormat(path.to_path_buf()),
        _ => IngestError::CorruptImage(path.to_path_buf()),
    })?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    if w == 0 || h == 0 {
        return Err(IngestError::CorruptImage(path.to_path_buf()));
    }
    let pixels = rgb.pixels().map(|p| p.0).collect();
    Ok(RasterImage::new(w, h, pixels))
}

/// Parses a dataset manifest.
///
/// Returns one sample per data row, in file order, with paths resolved
/// against the manifest's parent directory (absolute paths pass through).
pub fn read_manifest(path: &Path) -> Result<Vec<LabeledSample>, IngestError> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => IngestError::FileNotFound(path.to_path_buf()),
        _ => IngestError::Io { path: path.to_path_buf(), source: e },
    })?;
    let base = path.parent().unwrap_or(Path::new(""));

    let mut samples = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if !saw_header {
            if line != "path,label" {
                return Err(IngestError::MalformedLine(line_no));
            }
            saw_header = true;
            continue;
        }
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rel, label_str) = line
            .rsplit_once(',')
            .ok_or(IngestError::MalformedLine(line_no))?;
        if rel.is_empty() {
            return Err(IngestError::MalformedLine(line_no));
        }
        let label = VigorClass::from_name(label_str)
            .ok_or_else(|| IngestError::UnknownLabel(label_str.to_string(), line_no))?;
        samples.push(LabeledSample { path: base.join(rel), label });
    }
    if !saw_header {
        // Completely empty file: no header on line 1.
        return Err(IngestError::MalformedLine(1));
    }
    Ok(samples)
}

/// Stratified train/validation/test split.
///
/// Each class is shuffled independently (one seeded stream, classes visited
/// in ascending id order) and apportioned by the largest-remainder method,
/// so per-class subset sizes are within one sample of the exact ratio and
/// the three subsets partition the input.
pub fn split_dataset(
    samples: &[LabeledSample],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<DatasetSplit, IngestError> {
    if samples.is_empty() {
        return Err(IngestError::EmptyDataset);
    }
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|&x| !x.is_finite() || x < 0.0) || r.iter().sum::<f64>() <= 0.0 {
        return Err(IngestError::InvalidRatios);
    }

    let mut rng = SplitMix64::new(seed);
    let mut parts: [Vec<LabeledSample>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for class in VigorClass::ALL {
        let mut members: Vec<&LabeledSample> =
            samples.iter().filter(|s| s.label == class).collect();
        if members.is_empty() {
            continue;
        }
        rng.shuffle(&mut members);
        let counts = apportion(members.len(), &r);
        let mut offset = 0;
        for (part, &count) in parts.iter_mut().zip(&counts) {
            part.extend(members[offset..offset + count].iter().map(|&s| s.clone()));
            offset += count;
        }
    }
    let [train, validation, test] = parts;
    Ok(DatasetSplit { train, validation, test, seed })
}

/// Largest-remainder apportionment of `n` items into `ratios`-proportional
/// bins. Ties on the fractional part go to the earlier bin.
fn apportion(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let total: f64 = ratios.iter().sum();
    let exact: Vec<f64> = ratios.iter().map(|r| n as f64 * r / total).collect();
    let mut counts = [0usize; 3];
    let mut fracs: Vec<(usize, f64)> = Vec::with_capacity(3);
    for i in 0..3 {
        counts[i] = exact[i].floor() as usize;
        fracs.push((i, exact[i] - exact[i].floor()));
    }
    let assigned: usize = counts.iter().sum();
    // Stable sort keeps the index order for equal fractions, so ties favor
    // the earlier partition.
    fracs.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    for k in 0..n - assigned {
        counts[fracs[k].0] += 1;
    }
    counts
}
