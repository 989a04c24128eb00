//! Synthetic manometry-style pseudocolor images: a seeded generator that
//! draws one diagonal peristaltic pressure band per image, maps pressure
//! through a documented blue-to-red colormap, and writes class-labelled PNG
//! datasets with an ingest-ready manifest.
//!
//! The pressure field is a Gaussian-cross-section band running from the
//! upper left toward the lower right (time on x, sensor position on y) plus
//! clamped Gaussian noise. Peak pressure is drawn from a per-class band, so
//! the three vigor classes differ exactly in how much warm-colored signal
//! survives the pressure-color mask — the property the classifier feeds on.
//!
//! The colormap is piecewise-linear in hue (half-degree scale, matching
//! [`crate::colormask::Hsv`]) through the anchors
//! `(0, 120) (0.25, 45) (0.5, 30) (0.75, 18) (1, 0)` at full saturation and
//! value: t = 0 is pure blue, t = 0.5 yellow, t = 1 pure red, and hue
//! decreases monotonically in between. The default keep-list accepts
//! exactly the hues produced for t ≳ 0.25.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::colormask::{rgb_to_hsv, ColorList, Hsv};
use crate::ingest::VigorClass;
use crate::raster::RasterImage;
use crate::rng::{derive_seed, SplitMix64};

/// Default pressure of the colormap's red endpoint; chosen so every
/// weak-band peak still maps above the mask's keep threshold.
pub const DEFAULT_P_MAX: f64 = 55.0;

/// Piecewise-linear hue anchors `(t, hue)` on the half-degree scale.
const HUE_ANCHORS: [(f64, f64); 5] =
    [(0.0, 120.0), (0.25, 45.0), (0.5, 30.0), (0.75, 18.0), (1.0, 0.0)];

/// Per-class peak-pressure bands, in the same units as the pressure field.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBands {
    pub normal: (f64, f64),
    pub weak: (f64, f64),
    pub failed: (f64, f64),
}

impl Default for ClassBands {
    fn default() -> Self {
        ClassBands { normal: (60.0, 150.0), weak: (15.0, 45.0), failed: (0.0, 10.0) }
    }
}

impl ClassBands {
    fn validate(&self) -> Result<(), SynthError> {
        for (name, (lo, hi)) in
            [("normal", self.normal), ("weak", self.weak), ("failed", self.failed)]
        {
            if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi) {
                return Err(SynthError::InvalidBands(format!(
                    "{name} band [{lo}, {hi}] must satisfy 0 <= lo <= hi"
                )));
            }
        }
        if self.failed.1 >= self.weak.0 || self.weak.1 >= self.normal.0 {
            return Err(SynthError::InvalidBands(
                "bands must be disjoint and ordered failed < weak < normal".into(),
            ));
        }
        Ok(())
    }

    pub fn band(&self, class: VigorClass) -> (f64, f64) {
        match class {
            VigorClass::Normal => self.normal,
            VigorClass::Weak => self.weak,
            VigorClass::Failed => self.failed,
        }
    }
}

/// Everything that determines one synthetic swallow image.
#[derive(Debug, Clone, PartialEq)]
pub struct SwallowParams {
    pub class: VigorClass,
    /// Band amplitude at its center line.
    pub peak_pressure: f64,
    /// Gaussian cross-section sigma as a fraction of image height.
    pub wave_width: f64,
    /// Standard deviation of the additive pixel noise.
    pub noise_sigma: f64,
    /// Seed for the noise stream.
    pub seed: u64,
}

impl SwallowParams {
    fn validate(&self) -> Result<(), SynthError> {
        if !(self.peak_pressure.is_finite() && self.peak_pressure >= 0.0) {
            return Err(SynthError::InvalidParams(format!(
                "peak_pressure must be >= 0, got {}",
                self.peak_pressure
            )));
        }
        if !(self.wave_width.is_finite() && self.wave_width > 0.0 && self.wave_width <= 0.5) {
            return Err(SynthError::InvalidParams(format!(
                "wave_width must lie in (0, 0.5], got {}",
                self.wave_width
            )));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidParams(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Row-major grid of non-negative pressure samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl PressureField {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        assert!(x < self.width && y < self.height, "({x}, {y}) outside the field");
        self.values[y * self.width + x]
    }
}

/// Dataset-level generation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub bands: ClassBands,
    /// Noise sigma shared by every image.
    pub noise_sigma: f64,
    /// Per-image wave width is drawn uniformly from this range.
    pub wave_width_range: (f64, f64),
    /// Pressure mapped to the red endpoint of the colormap.
    pub p_max: f64,
    /// Cool-colored clutter density; 0 disables distractors.
    pub distractor_level: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            width: 128,
            height: 128,
            bands: ClassBands::default(),
            noise_sigma: 9.0,
            wave_width_range: (0.05, 0.10),
            p_max: DEFAULT_P_MAX,
            distractor_level: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<(), SynthError> {
        if self.width < 32 || self.height < 32 {
            return Err(SynthError::TooSmall { width: self.width, height: self.height });
        }
        self.bands.validate()?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SynthError::InvalidParams(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        let (lo, hi) = self.wave_width_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi && hi <= 0.5) {
            return Err(SynthError::InvalidParams(format!(
                "wave_width_range [{lo}, {hi}] must satisfy 0 < lo <= hi <= 0.5"
            )));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(SynthError::InvalidPMax(self.p_max));
        }
        if !(self.distractor_level.is_finite() && self.distractor_level >= 0.0) {
            return Err(SynthError::InvalidParams(format!(
                "distractor_level must be >= 0, got {}",
                self.distractor_level
            )));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("field must be at least 32x32, got {width}x{height}")]
    TooSmall { width: usize, height: usize },
    #[error("invalid swallow parameters: {0}")]
    InvalidParams(String),
    #[error("invalid class bands: {0}")]
    InvalidBands(String),
    #[error("p_max must be positive and finite, got {0}")]
    InvalidPMax(f64),
    #[error("n_per_class must be at least 1")]
    EmptyDataset,
    #[error("i/o error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> SynthError + '_ {
    move |source| SynthError::Io { path: path.to_path_buf(), source }
}

fn hsv_of(rgb: [u8; 3]) -> Hsv {
    rgb_to_hsv(rgb[0], rgb[1], rgb[2])
}

/// Band center as a function of column: a line from 15% of the height at the
/// left edge to 85% at the right edge.
fn band_center(x: usize, width: usize, height: usize) -> f64 {
    height as f64 * (0.15 + 0.7 * x as f64 / (width - 1) as f64)
}

/// Generates one pressure field: the diagonal band plus clamped noise.
///
/// Noise is drawn row-major, one normal deviate per sample, from a stream
/// seeded by `params.seed` alone — same parameters, same field.
pub fn synth_pressure(
    params: &SwallowParams,
    width: usize,
    height: usize,
) -> Result<PressureField, SynthError> {
    params.validate()?;
    if width < 32 || height < 32 {
        return Err(SynthError::TooSmall { width, height });
    }
    let sigma = params.wave_width * height as f64;
    let mut rng = SplitMix64::new(params.seed);
    let mut values = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let dy = y as f64 - band_center(x, width, height);
            let band = params.peak_pressure * (-dy * dy / (2.0 * sigma * sigma)).exp();
            let noise = params.noise_sigma * rng.next_normal();
            values.push((band + noise).max(0.0));
        }
    }
    Ok(PressureField { width, height, values })
}

/// Converts HSV (`h` in degrees `[0, 360)`, `s`/`v` in `[0, 1]`) to RGB.
pub fn hsv_to_rgb(h: f64, s: f64, v: f64) -> [u8; 3] {
    let h = h.rem_euclid(360.0);
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let to_byte = |f: f64| ((f + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [to_byte(r), to_byte(g), to_byte(b)]
}

/// Hue (half-degree scale) of the colormap at `t`, by linear interpolation
/// between the documented anchors.
fn colormap_hue(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    for pair in HUE_ANCHORS.windows(2) {
        let (t0, h0) = pair[0];
        let (t1, h1) = pair[1];
        if t <= t1 {
            return h0 + (h1 - h0) * (t - t0) / (t1 - t0);
        }
    }
    HUE_ANCHORS[HUE_ANCHORS.len() - 1].1
}

/// The pressure colormap: `t` in `[0, 1]` (clamped) to a fully saturated
/// RGB color, blue at 0 through green, yellow and orange to red at 1.
pub fn colormap_rgb(t: f64) -> [u8; 3] {
    // The anchor hues are on the half-degree scale; the converter wants
    // full degrees.
    hsv_to_rgb(colormap_hue(t) * 2.0, 1.0, 1.0)
}

/// Renders a pressure field through the colormap; values at or above
/// `p_max` saturate to red.
pub fn render_colormap(field: &PressureField, p_max: f64) -> Result<RasterImage, SynthError> {
    if !(p_max.is_finite() && p_max > 0.0) {
        return Err(SynthError::InvalidPMax(p_max));
    }
    Ok(RasterImage::from_fn(field.width as u32, field.height as u32, |x, y| {
        colormap_rgb(field.get(x as usize, y as usize) / p_max)
    }))
}

/// Paints seeded cool-colored disks over pixels that are *outside* the
/// keep-list, leaving every kept pixel untouched — so masking the image
/// before and after yields identical results. Returns the number of pixels
/// painted. `level` scales the disk count (roughly `level` disks per 256
/// pixels).
pub fn add_distractors(
    image: &mut RasterImage,
    keep: &ColorList,
    level: f64,
    seed: u64,
) -> Result<usize, SynthError> {
    if !(level.is_finite() && level >= 0.0) {
        return Err(SynthError::InvalidParams(format!(
            "distractor level must be >= 0, got {level}"
        )));
    }
    let (w, h) = (image.width() as i64, image.height() as i64);
    let disks = (level * (w * h) as f64 / 256.0).round() as usize;
    let max_radius = 3.0_f64.max(w.min(h) as f64 / 12.0);
    let mut rng = SplitMix64::new(seed);
    let mut painted = 0usize;
    for _ in 0..disks {
        let cx = rng.below(w as u64) as i64;
        let cy = rng.below(h as u64) as i64;
        let radius = rng.range_f64(2.0, max_radius);
        // Cool hues (120-220 full degrees) at full saturation sit far from
        // every warm keep-range, so painted pixels can never join the mask.
        let hue = rng.range_f64(120.0, 220.0);
        let value = rng.range_f64(120.0, 255.0) / 255.0;
        let color = hsv_to_rgb(hue, 1.0, value);
        let r = radius.ceil() as i64;
        for y in (cy - r).max(0)..=(cy + r).min(h - 1) {
            for x in (cx - r).max(0)..=(cx + r).min(w - 1) {
                let (dx, dy) = ((x - cx) as f64, (y - cy) as f64);
                if dx * dx + dy * dy > radius * radius {
                    continue;
                }
                let (xu, yu) = (x as u32, y as u32);
                if !keep.contains(hsv_of(image.get(xu, yu))) {
                    image.set(xu, yu, color);
                    painted += 1;
                }
            }
        }
    }
    Ok(painted)
}

/// Generates a class-balanced dataset: `n_per_class` PNGs per vigor class
/// (file names `<class>_<index>.png`) plus a `manifest.csv` in ingest
/// format. Returns the manifest path.
///
/// Every image draws its parameters from a stream derived from
/// `config.seed` and the image's global index, so generation is
/// deterministic and could be parallelized per image without changing a
/// byte of output.
pub fn generate_dataset(
    n_per_class: usize,
    out_dir: &Path,
    config: &SynthConfig,
) -> Result<PathBuf, SynthError> {
    if n_per_class == 0 {
        return Err(SynthError::EmptyDataset);
    }
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let keep = crate::colormask::default_color_list();
    let mut manifest = String::from("path,label\n");
    for (class_index, &class) in VigorClass::ALL.iter().enumerate() {
        let band = config.bands.band(class);
        for i in 0..n_per_class {
            let global_index = (class_index * n_per_class + i) as u64;
            let mut rng = SplitMix64::new(derive_seed(config.seed, global_index));
            let peak = rng.range_f64(band.0, band.1);
            let wave = rng.range_f64(config.wave_width_range.0, config.wave_width_range.1);
            let noise_seed = rng.next_u64();
            let distractor_seed = rng.next_u64();

            let params = SwallowParams {
                class,
                peak_pressure: peak,
                wave_width: wave,
                noise_sigma: config.noise_sigma,
                seed: noise_seed,
            };
            let field = synth_pressure(&params, config.width, config.height)?;
            let mut image = render_colormap(&field, config.p_max)?;
            if config.distractor_level > 0.0 {
                add_distractors(&mut image, &keep, config.distractor_level, distractor_seed)?;
            }

            let file_name = format!("{}_{i:04}.png", class.name());
            let path = out_dir.join(&file_name);
            image.save_png(&path).map_err(io_err(&path))?;
            manifest.push_str(&file_name);
            manifest.push(',');
            manifest.push_str(class.name());
            manifest.push('\n');
        }
    }
    let manifest_path = out_dir.join("manifest.csv");
    fs::write(&manifest_path, manifest).map_err(io_err(&manifest_path))?;
    Ok(manifest_path)
}
