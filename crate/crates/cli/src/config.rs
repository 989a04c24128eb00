//! Pipeline configuration: defaults, `key=value` config files, and
//! command-line override merging (defaults < file < flags).
//!
//! Config files are flat text with dotted section prefixes:
//!
//! ```text
//! # descriptor geometry
//! hog.window_w = 128
//! hog.cell = 8
//! train.c = 0.025
//! roi.threshold = 0.05
//! split.train = 0.7
//! fe.enabled = true
//! colors.file = ranges.csv
//! ```
//!
//! Blank lines and `#` comments are ignored; unknown keys are rejected with
//! their line number. Relative `colors.file` paths resolve against the
//! config file's directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use manovigor::colormask::{default_color_list, parse_color_list, ColorList};
use manovigor::roi::{DEFAULT_DENSITY_THRESHOLD, DEFAULT_PADDING};
use manovigor::svm::TrainConfig;
use manovigor::HogConfig;
use manovigor::roi::CropBox;

use crate::CliError;

/// Dataset split ratios and the shuffle seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub seed: u64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios { train: 0.7, validation: 0.2, test: 0.1, seed: 0 }
    }
}

impl SplitRatios {
    pub fn ratios(&self) -> (f64, f64, f64) {
        (self.train, self.validation, self.test)
    }
}

/// Fully merged settings for one pipeline invocation.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub hog: HogConfig,
    pub colors: ColorList,
    pub roi_threshold: f64,
    pub roi_padding: f64,
    pub train: TrainConfig,
    pub fe_enabled: bool,
    pub split: SplitRatios,
    hog_explicit: bool,
    fe_explicit: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hog: HogConfig::default(),
            colors: default_color_list(),
            roi_threshold: DEFAULT_DENSITY_THRESHOLD,
            roi_padding: DEFAULT_PADDING,
            train: TrainConfig::default(),
            fe_enabled: true,
            split: SplitRatios::default(),
            hog_explicit: false,
            fe_explicit: false,
        }
    }
}

impl PipelineConfig {
    /// True when the descriptor geometry was set explicitly (config file or
    /// flag) rather than left at the defaults — evaluation uses this to
    /// decide whether a digest mismatch against a model is an error or the
    /// model's own config should simply be adopted.
    pub fn hog_explicit(&self) -> bool {
        self.hog_explicit
    }

    /// True when the FE toggle was set explicitly.
    pub fn fe_explicit(&self) -> bool {
        self.fe_explicit
    }

    /// Validates the composed sub-configurations.
    pub fn validate(&self) -> Result<(), CliError> {
        self.hog.validate()?;
        self.train.validate()?;
        if !(self.roi_threshold > 0.0 && self.roi_threshold <= 1.0) {
            return Err(CliError::Usage(format!(
                "roi threshold must lie in (0, 1], got {}",
                self.roi_threshold
            )));
        }
        if !(self.roi_padding.is_finite() && self.roi_padding >= 0.0) {
            return Err(CliError::Usage(format!(
                "roi padding must be >= 0, got {}",
                self.roi_padding
            )));
        }
        for (name, v) in [
            ("split.train", self.split.train),
            ("split.validation", self.split.validation),
            ("split.test", self.split.test),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::Usage(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    /// Sets both the split shuffle seed and the trainer seed.
    pub seed: Option<u64>,
    pub no_fe: bool,
    /// Drops the green range from the keep-list.
    pub no_green: bool,
    pub roi_threshold: Option<f64>,
    pub roi_padding: Option<f64>,
    pub c: Option<f64>,
    pub split: Option<(f64, f64, f64)>,
    pub colors_file: Option<PathBuf>,
}

fn parse_value<T: FromStr>(path: &Path, line: usize, key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse().map_err(|_| CliError::Config {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse `{raw}` as a value for {key}"),
    })
}

fn parse_bool(path: &Path, line: usize, key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(CliError::Config {
            path: path.to_path_buf(),
            line,
            message: format!("cannot parse `{raw}` as a boolean for {key}"),
        }),
    }
}

fn apply_file(config: &mut PipelineConfig, path: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().unwrap_or(Path::new(""));
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw_line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(CliError::Config {
                path: path.to_path_buf(),
                line,
                message: format!("expected key=value, got `{trimmed}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "hog.window_w" => config.hog.window_w = parse_value(path, line, key, value)?,
            "hog.window_h" => config.hog.window_h = parse_value(path, line, key, value)?,
            "hog.cell" => config.hog.cell = parse_value(path, line, key, value)?,
            "hog.block" => config.hog.block = parse_value(path, line, key, value)?,
            "hog.stride" => config.hog.stride = parse_value(path, line, key, value)?,
            "hog.bins" => config.hog.bins = parse_value(path, line, key, value)?,
            "hog.signed" => config.hog.signed = parse_bool(path, line, key, value)?,
            "hog.gamma" => config.hog.gamma = parse_value(path, line, key, value)?,
            "hog.clip" => config.hog.clip = parse_value(path, line, key, value)?,
            "roi.threshold" => config.roi_threshold = parse_value(path, line, key, value)?,
            "roi.pad" => config.roi_padding = parse_value(path, line, key, value)?,
            "train.c" => config.train.c = parse_value(path, line, key, value)?,
            "train.tol" => config.train.tol = parse_value(path, line, key, value)?,
            "train.max_iter" => config.train.max_iter = parse_value(path, line, key, value)?,
            "train.seed" => config.train.seed = parse_value(path, line, key, value)?,
            "split.train" => config.split.train = parse_value(path, line, key, value)?,
            "split.validation" => config.split.validation = parse_value(path, line, key, value)?,
            "split.test" => config.split.test = parse_value(path, line, key, value)?,
            "split.seed" => config.split.seed = parse_value(path, line, key, value)?,
            "fe.enabled" => config.fe_enabled = parse_bool(path, line, key, value)?,
            "colors.file" => {
                let file = base.join(value);
                config.colors = load_color_file(&file)?;
            }
            _ => {
                return Err(CliError::Config {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown key `{key}`"),
                });
            }
        }
        if key.starts_with("hog.") {
            config.hog_explicit = true;
        }
        if key == "fe.enabled" {
            config.fe_explicit = true;
        }
    }
    Ok(())
}

fn load_color_file(path: &Path) -> Result<ColorList, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    Ok(parse_color_list(&text)?)
}

/// Builds the effective configuration: defaults, then the config file, then
/// command-line overrides.
pub fn load_config(file: Option<&Path>, overrides: &Overrides) -> Result<PipelineConfig, CliError> {
    let mut config = PipelineConfig::default();
    if let Some(path) = file {
        apply_file(&mut config, path)?;
    }
    if let Some(path) = &overrides.colors_file {
        config.colors = load_color_file(path)?;
    }
    if overrides.no_green {
        config.colors = config.colors.without("green").ok_or_else(|| {
            CliError::Usage("the color list has no removable `green` range".into())
        })?;
    }
    if let Some(seed) = overrides.seed {
        config.split.seed = seed;
        config.train.seed = seed;
    }
    if overrides.no_fe {
        config.fe_enabled = false;
        config.fe_explicit = true;
    }
    if let Some(t) = overrides.roi_threshold {
        config.roi_threshold = t;
    }
    if let Some(p) = overrides.roi_padding {
        config.roi_padding = p;
    }
    if let Some(c) = overrides.c {
        config.train.c = c;
    }
    if let Some((a, b, c)) = overrides.split {
        config.split.train = a;
        config.split.validation = b;
        config.split.test = c;
    }
    config.validate()?;
    Ok(config)
}

/// Parses a `x,y,w,h` crop specification.
pub fn parse_crop(raw: &str) -> Result<CropBox, CliError> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!("crop must be x,y,w,h, got `{raw}`")));
    }
    let mut nums = [0u32; 4];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Usage(format!("crop component `{part}` is not a number")))?;
    }
    if nums[2] == 0 || nums[3] == 0 {
        return Err(CliError::Usage("crop width and height must be positive".into()));
    }
    Ok(CropBox { x: nums[0], y: nums[1], width: nums[2], height: nums[3] })
}

/// Parses a `WxH` size specification.
pub fn parse_size(raw: &str) -> Result<(u32, u32), CliError> {
    let Some((w, h)) = raw.split_once(['x', 'X']) else {
        return Err(CliError::Usage(format!("size must be WxH, got `{raw}`")));
    };
    let parse = |s: &str| -> Result<u32, CliError> {
        s.trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("size component `{s}` is not a number")))
    };
    let (w, h) = (parse(w)?, parse(h)?);
    if w == 0 || h == 0 {
        return Err(CliError::Usage("size components must be positive".into()));
    }
    Ok((w, h))
}

/// Parses a `train,validation,test` ratio triple.
pub fn parse_split(raw: &str) -> Result<(f64, f64, f64), CliError> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "split must be train,validation,test, got `{raw}`"
        )));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part
            .parse()
            .map_err(|_| CliError::Usage(format!("split component `{part}` is not a number")))?;
    }
    Ok((nums[0], nums[1], nums[2]))
}

/// Parses a comma-separated list of C candidates.
pub fn parse_c_list(raw: &str) -> Result<Vec<f64>, CliError> {
    let values: Result<Vec<f64>, _> =
        raw.split(',').map(|s| s.trim().parse::<f64>()).collect();
    let values =
        values.map_err(|_| CliError::Usage(format!("cannot parse C list `{raw}`")))?;
    if values.is_empty() {
        return Err(CliError::Usage("the C list is empty".into()));
    }
    Ok(values)
}
