//! Region-of-interest detection and cropping.
//!
//! The contraction band occupies a bounded region of a plot; the rest is
//! axes, margins and background. [`detect_roi`] finds the smallest box
//! containing every row and column where the keep-palette density is high
//! enough, pads it slightly, and [`crop`] extracts it. A manually supplied
//! [`CropBox`] bypasses detection entirely, making the crop a pure function
//! of image and box.

use crate::colormask::{build_mask, ColorList};
use crate::raster::RasterImage;

/// Default fraction of a row/column that must be kept-palette pixels before
/// it counts as signal.
pub const DEFAULT_DENSITY_THRESHOLD: f64 = 0.05;

/// Default padding added around the detected box, as a fraction of the box
/// dimension per side.
pub const DEFAULT_PADDING: f64 = 0.02;

/// An axis-aligned crop rectangle; `x, y` is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CropBox {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl CropBox {
    /// Whole-image box.
    pub fn full(image: &RasterImage) -> CropBox {
        CropBox { x: 0, y: 0, width: image.width(), height: image.height() }
    }

    fn fits(&self, image: &RasterImage) -> bool {
        self.width > 0
            && self.height > 0
            && self.x as u64 + self.width as u64 <= image.width() as u64
            && self.y as u64 + self.height as u64 <= image.height() as u64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RoiError {
    #[error("no row or column reaches the keep-pixel density threshold")]
    NoSignal,
    #[error("crop box {x},{y} {width}x{height} exceeds the {image_w}x{image_h} image")]
    OutOfBounds { x: u32, y: u32, width: u32, height: u32, image_w: u32, image_h: u32 },
    #[error("density threshold must be in (0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("padding must be non-negative and finite, got {0}")]
    InvalidPadding(f64),
}

/// Locates the signal region with the default 2% padding.
///
/// See [`detect_roi_padded`] for the algorithm.
pub fn detect_roi(
    image: &RasterImage,
    list: &ColorList,
    density_threshold: f64,
) -> Result<CropBox, RoiError> {
    detect_roi_padded(image, list, density_threshold, DEFAULT_PADDING)
}

/// Locates the signal region.
///
/// A row (column) qualifies when its fraction of kept pixels exceeds
/// `density_threshold`. The box spans the extreme qualifying rows and
/// columns, then grows by `padding` of its own width/height on each side
/// (rounded to pixels, clamped to the image). Returns [`RoiError::NoSignal`]
/// when no row or no column qualifies.
pub fn detect_roi_padded(
    image: &RasterImage,
    list: &ColorList,
    density_threshold: f64,
    padding: f64,
) -> Result<CropBox, RoiError> {
    if !(density_threshold > 0.0 && density_threshold <= 1.0) {
        return Err(RoiError::InvalidThreshold(density_threshold));
    }
    if !padding.is_finite() || padding < 0.0 {
        return Err(RoiError::InvalidPadding(padding));
    }
    let mask = build_mask(image, list);
    let (w, h) = (image.width() as usize, image.height() as usize);

    let mut row_counts = vec![0usize; h];
    let mut col_counts = vec![0usize; w];
    for y in 0..h {
        for x in 0..w {
            if mask.get(x as u32, y as u32) {
                row_counts[y] += 1;
                col_counts[x] += 1;
            }
        }
    }
    let qualifying = |counts: &[usize], denom: usize| -> Option<(usize, usize)> {
        let mut bounds = None;
        for (i, &c) in counts.iter().enumerate() {
            if c as f64 / denom as f64 > density_threshold {
                bounds = Some(match bounds {
                    None => (i, i),
                    Some((lo, _)) => (lo, i),
                });
            }
        }
        bounds
    };
    let (top, bottom) = qualifying(&row_counts, w).ok_or(RoiError::NoSignal)?;
    let (left, right) = qualifying(&col_counts, h).ok_or(RoiError::NoSignal)?;

    let box_w = (right - left + 1) as f64;
    let box_h = (bottom - top + 1) as f64;
    let pad_x = (padding * box_w).round() as i64;
    let pad_y = (padding * box_h).round() as i64;
    let x0 = (left as i64 - pad_x).max(0) as u32;
    let y0 = (top as i64 - pad_y).max(0) as u32;
    let x1 = ((right as i64 + pad_x) as u64).min(image.width() as u64 - 1) as u32;
    let y1 = ((bottom as i64 + pad_y) as u64).min(image.height() as u64 - 1) as u32;
    Ok(CropBox { x: x0, y: y0, width: x1 - x0 + 1, height: y1 - y0 + 1 })
}

/// Extracts the sub-image under `cb`.
pub fn crop(image: &RasterImage, cb: CropBox) -> Result<RasterImage, RoiError> {
    if !cb.fits(image) {
        return Err(RoiError::OutOfBounds {
            x: cb.x,
            y: cb.y,
            width: cb.width,
            height: cb.height,
            image_w: image.width(),
            image_h: image.height(),
        });
    }
    Ok(RasterImage::from_fn(cb.width, cb.height, |x, y| image.get(cb.x + x, cb.y + y)))
}
