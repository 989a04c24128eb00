//! Contraction-vigor classification for esophageal pressure-topography plots.
//!
//! The library implements the full feature pipeline and classifier:
//!
//! 1. [`ingest`] — PNG decoding, dataset manifests, stratified splits.
//! 2. [`colormask`] — HSV range filtering that keeps the warm (high-pressure)
//!    palette of a pseudocolor plot and blacks out everything else.
//! 3. [`roi`] — density-based localization of the contraction band.
//! 4. [`hog`] — histogram-of-oriented-gradients descriptors over the
//!    (optionally color-filtered) crop.
//! 5. [`svm`] — a deterministic dual coordinate-descent linear SVM with
//!    one-vs-rest multiclass reduction and a binary model file format.
//! 6. [`metrics`] — confusion matrices and per-class precision/recall/F1
//!    reports.
//! 7. [`synth`] — a seeded generator of synthetic pressure-topography plots
//!    for end-to-end pipeline tests without clinical data.
//!
//! Everything seeded is driven by [`rng::SplitMix64`], so every stage is
//! bit-reproducible for a fixed seed and configuration.

pub mod colormask;
pub mod crc32;
pub mod hog;
pub mod ingest;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod roi;
pub mod svm;
pub mod synth;

pub use colormask::{ColorList, ColorRange, Hsv, PixelMask};
pub use hog::{Descriptor, HogConfig};
pub use ingest::{DatasetSplit, LabeledSample, VigorClass};
pub use metrics::{ClassReport, ConfusionMatrix};
pub use raster::RasterImage;
pub use roi::CropBox;
pub use svm::{LinearSvmModel, TrainConfig};
pub use synth::SynthConfig;
