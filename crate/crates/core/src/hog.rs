//! Histogram-of-oriented-gradients descriptors.
//!
//! The descriptor pipeline is the classic formulation:
//!
//! 1. Resize the crop to a fixed window (bilinear).
//! 2. Gamma-normalize: luminance in `[0, 1]` raised to a power.
//! 3. Central-difference gradients, magnitude and orientation per pixel.
//! 4. Per-cell orientation histograms with magnitude-weighted linear
//!    interpolation between the two nearest bin centers.
//! 5. Per-block L2-Hys normalization (L2, clip, renormalize) over sliding
//!    blocks of cells.
//! 6. Concatenation in row-major block order.
//!
//! Every stage is exposed so tests (and diagnostics) can probe them
//! separately; [`compute_descriptor`] wires them together.

use std::fs;
use std::io;
use std::path::Path;

use crate::crc32;
use crate::raster::RasterImage;

/// Epsilon added inside the first block normalization so empty blocks stay
/// finite.
pub const BLOCK_NORM_EPS: f64 = 1e-5;

/// ITU-R 601 luma weights.
const LUMA_R: f64 = 0.299;
const LUMA_G: f64 = 0.587;
const LUMA_B: f64 = 0.114;

/// Geometry and normalization parameters of the descriptor.
///
/// `cell` is the cell side in pixels, `block` the block side in cells,
/// `stride` the block step in cells. The window must divide evenly into
/// cells and the cell grid must tile exactly into blocks:
/// `(cells - block) % stride == 0` on both axes.
#[derive(Debug, Clone, PartialEq)]
pub struct HogConfig {
    pub window_w: u32,
    pub window_h: u32,
    pub cell: u32,
    pub block: u32,
    pub stride: u32,
    pub bins: u32,
    pub signed: bool,
    pub gamma: f64,
    pub clip: f64,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            window_w: 128,
            window_h: 128,
            cell: 8,
            block: 2,
            stride: 1,
            bins: 9,
            signed: false,
            gamma: 0.5,
            clip: 0.2,
        }
    }
}

impl HogConfig {
    /// Validates the geometric and numeric constraints.
    pub fn validate(&self) -> Result<(), HogError> {
        let fail = |msg: String| Err(HogError::InvalidConfig(msg));
        if self.cell == 0 || self.block == 0 || self.stride == 0 {
            return fail("cell, block and stride must be positive".into());
        }
        if self.bins < 2 {
            return fail(format!("need at least 2 orientation bins, got {}", self.bins));
        }
        if self.window_w == 0 || self.window_h == 0 {
            return fail("window dimensions must be positive".into());
        }
        if self.window_w % self.cell != 0 || self.window_h % self.cell != 0 {
            return fail(format!(
                "window {}x{} is not a multiple of the {}px cell",
                self.window_w, self.window_h, self.cell
            ));
        }
        let (cx, cy) = (self.window_w / self.cell, self.window_h / self.cell);
        if cx < self.block || cy < self.block {
            return fail(format!(
                "cell grid {cx}x{cy} cannot hold a {0}x{0} block",
                self.block
            ));
        }
        if (cx - self.block) % self.stride != 0 || (cy - self.block) % self.stride != 0 {
            return fail(format!(
                "cell grid {cx}x{cy} does not tile into {0}-cell blocks at stride {1}",
                self.block, self.stride
            ));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return fail(format!("gamma must be a positive finite number, got {}", self.gamma));
        }
        if !(self.clip.is_finite() && self.clip > 0.0) {
            return fail(format!("clip must be a positive finite number, got {}", self.clip));
        }
        Ok(())
    }

    pub fn cells_x(&self) -> u32 {
        self.window_w / self.cell
    }

    pub fn cells_y(&self) -> u32 {
        self.window_h / self.cell
    }

    pub fn blocks_x(&self) -> u32 {
        (self.cells_x() - self.block) / self.stride + 1
    }

    pub fn blocks_y(&self) -> u32 {
        (self.cells_y() - self.block) / self.stride + 1
    }

    /// Orientation span in degrees: 180 unsigned, 360 signed.
    pub fn span(&self) -> f64 {
        if self.signed {
            360.0
        } else {
            180.0
        }
    }

    /// Total descriptor length:
    /// `blocks_x * blocks_y * block^2 * bins`.
    pub fn descriptor_len(&self) -> usize {
        self.blocks_x() as usize
            * self.blocks_y() as usize
            * (self.block * self.block) as usize
            * self.bins as usize
    }

    /// Canonical 41-byte binary encoding (little-endian), used both in the
    /// model file and as the digest input.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(41);
        for v in [self.window_w, self.window_h, self.cell, self.block, self.stride, self.bins] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.signed as u8);
        out.extend_from_slice(&self.gamma.to_le_bytes());
        out.extend_from_slice(&self.clip.to_le_bytes());
        out
    }

    /// Decodes [`HogConfig::to_bytes`] output.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HogError> {
        if bytes.len() != 41 {
            return Err(HogError::MalformedFile(format!(
                "descriptor config block is {} bytes, expected 41",
                bytes.len()
            )));
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let config = HogConfig {
            window_w: u32_at(0),
            window_h: u32_at(4),
            cell: u32_at(8),
            block: u32_at(12),
            stride: u32_at(16),
            bins: u32_at(20),
            signed: bytes[24] != 0,
            gamma: f64_at(25),
            clip: f64_at(33),
        };
        config.validate()?;
        Ok(config)
    }

    /// 64-bit FNV-1a digest of the canonical encoding; embedded in model and
    /// batch files so features and models can be checked for compatibility.
    pub fn digest(&self) -> u64 {
        let mut hash = 0xCBF2_9CE4_8422_2325u64;
        for b in self.to_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x0000_0100_0000_01B3);
        }
        hash
    }
}

/// Per-pixel gamma-corrected luminance in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct LuminanceField {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl LuminanceField {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width as usize * height as usize);
        LuminanceField { width, height, values }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }
}

/// Per-pixel gradient magnitude and orientation.
///
/// Orientation is degrees in `[0, 180)` unsigned or `[0, 360)` signed;
/// zero-gradient pixels carry orientation 0 and magnitude 0.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub magnitude: Vec<f64>,
    pub orientation: Vec<f64>,
    pub signed: bool,
}

/// A computed descriptor plus the digest of the configuration that shaped
/// it.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub values: Vec<f64>,
    pub config_digest: u64,
}

/// A set of descriptors extracted under one configuration, with the
/// manifest row index each one came from.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorBatch {
    pub dim: u32,
    pub digest: u64,
    pub rows: Vec<u32>,
    /// `rows.len() * dim` values, row-major.
    pub data: Vec<f32>,
}

#[derive(Debug, thiserror::Error)]
pub enum HogError {
    #[error("invalid descriptor configuration: {0}")]
    InvalidConfig(String),
    #[error("image {width}x{height} is too small for gradients (needs 3x3)")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("cell at ({x}, {y}) with side {cell} exceeds the {width}x{height} field")]
    CellOutOfBounds { x: u32, y: u32, cell: u32, width: u32, height: u32 },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a descriptor file (bad magic)")]
    BadMagic,
    #[error("descriptor file version {0} is not supported")]
    VersionUnsupported(u16),
    #[error("descriptor file is truncated")]
    Truncated,
    #[error("descriptor file checksum mismatch")]
    ChecksumMismatch,
    #[error("malformed descriptor data: {0}")]
    MalformedFile(String),
}

/// Gamma-normalized luminance: ITU-R 601 luma scaled to `[0, 1]`, raised to
/// `gamma`.
///
/// `gamma < 1` compresses highlights and expands shadows, damping the
/// illumination sensitivity of downstream gradients.
pub fn gamma_normalize(image: &RasterImage, gamma: f64) -> LuminanceField {
    assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive, got {gamma}");
    let values = image
        .pixels()
        .iter()
        .map(|&[r, g, b]| {
            let luma = (LUMA_R * r as f64 + LUMA_G * g as f64 + LUMA_B * b as f64) / 255.0;
            luma.powf(gamma)
        })
        .collect();
    LuminanceField::new(image.width(), image.height(), values)
}

/// Central-difference gradients with one-sided differences on the border.
///
/// Interior: `Ix(x, y) = L(x+1, y) - L(x-1, y)` and
/// `Iy(x, y) = L(x, y+1) - L(x, y-1)`; magnitude is `sqrt(Ix^2 + Iy^2)` and
/// orientation `atan2(Iy, Ix)` folded into `[0, 180)` (unsigned) or
/// `[0, 360)` (signed).
pub fn compute_gradients(lum: &LuminanceField, signed: bool) -> Result<GradientField, HogError> {
    let (w, h) = (lum.width(), lum.height());
    if w < 3 || h < 3 {
        return Err(HogError::ImageTooSmall { width: w, height: h });
    }
    let n = w as usize * h as usize;
    let mut magnitude = vec![0.0; n];
    let mut orientation = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let ix = match x {
                0 => lum.get(1, y) - lum.get(0, y),
                x if x == w - 1 => lum.get(w - 1, y) - lum.get(w - 2, y),
                _ => lum.get(x + 1, y) - lum.get(x - 1, y),
            };
            let iy = match y {
                0 => lum.get(x, 1) - lum.get(x, 0),
                y if y == h - 1 => lum.get(x, h - 1) - lum.get(x, h - 2),
                _ => lum.get(x, y + 1) - lum.get(x, y - 1),
            };
            let mag = (ix * ix + iy * iy).sqrt();
            let idx = y as usize * w as usize + x as usize;
            magnitude[idx] = mag;
            orientation[idx] = if mag == 0.0 {
                0.0
            } else {
                let mut deg = iy.atan2(ix).to_degrees();
                if signed {
                    if deg < 0.0 {
                        deg += 360.0;
                    }
                    if deg >= 360.0 {
                        deg -= 360.0;
                    }
                } else {
                    if deg < 0.0 {
                        deg += 180.0;
                    }
                    if deg >= 180.0 {
                        deg -= 180.0;
                    }
                }
                deg
            };
        }
    }
    Ok(GradientField { width: w, height: h, magnitude, orientation, signed })
}

/// Orientation histogram of one cell.
///
/// `origin` is the cell's top-left pixel. Each pixel's magnitude is split
/// linearly between the two bin centers bracketing its orientation; bin
/// centers sit at `(i + 0.5) * span / bins` and interpolation wraps
/// circularly across the span boundary.
pub fn cell_histogram(
    field: &GradientField,
    origin: (u32, u32),
    config: &HogConfig,
) -> Result<Vec<f64>, HogError> {
    debug_assert_eq!(field.signed, config.signed, "gradient mode differs from config");
    let (x0, y0) = origin;
    let n = config.cell;
    if x0 + n > field.width || y0 + n > field.height {
        return Err(HogError::CellOutOfBounds {
            x: x0,
            y: y0,
            cell: n,
            width: field.width,
            height: field.height,
        });
    }
    let bins = config.bins as usize;
    let bin_width = config.span() / bins as f64;
    let mut hist = vec![0.0; bins];
    for y in y0..y0 + n {
        for x in x0..x0 + n {
            let idx = y as usize * field.width as usize + x as usize;
            let mag = field.magnitude[idx];
            if mag == 0.0 {
                continue;
            }
            // Position relative to bin centers: p = angle/width - 0.5 puts
            // integer values exactly on centers.
            let p = field.orientation[idx] / bin_width - 0.5;
            let lower = p.floor();
            let frac = p - lower;
            let b0 = (lower as i64).rem_euclid(bins as i64) as usize;
            let b1 = (b0 + 1) % bins;
            hist[b0] += mag * (1.0 - frac);
            hist[b1] += mag * frac;
        }
    }
    Ok(hist)
}

/// L2-Hys normalization of one block.
///
/// The concatenated histograms are L2-normalized with a small epsilon,
/// clipped at `clip`, then renormalized by the exact L2 norm, so any
/// non-zero output has unit norm. An all-zero block stays all-zero.
///
/// # Panics
/// Panics if `histograms` is empty; the caller assembles exactly
/// `block^2` cell histograms.
pub fn block_descriptor(histograms: &[&[f64]], clip: f64) -> Vec<f64> {
    assert!(!histograms.is_empty(), "a block must contain at least one cell");
    let mut v: Vec<f64> = histograms.iter().flat_map(|h| h.iter().copied()).collect();
    let norm1 = (v.iter().map(|x| x * x).sum::<f64>() + BLOCK_NORM_EPS * BLOCK_NORM_EPS).sqrt();
    for x in v.iter_mut() {
        *x = (*x / norm1).min(clip);
    }
    let norm2 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm2 > 0.0 {
        for x in v.iter_mut() {
            *x /= norm2;
        }
    }
    v
}

/// Bilinear resize with pixel-center alignment.
///
/// Source coordinates are `(i + 0.5) * src / dst - 0.5`, clamped to the
/// image; output channels round half away from zero. Resizing to the
/// source size reproduces the input exactly.
pub fn resize_bilinear(image: &RasterImage, width: u32, height: u32) -> RasterImage {
    assert!(width > 0 && height > 0, "target dimensions must be positive");
    if width == image.width() && height == image.height() {
        return image.clone();
    }
    let (sw, sh) = (image.width(), image.height());
    RasterImage::from_fn(width, height, |tx, ty| {
        let sx = ((tx as f64 + 0.5) * sw as f64 / width as f64 - 0.5).clamp(0.0, (sw - 1) as f64);
        let sy = ((ty as f64 + 0.5) * sh as f64 / height as f64 - 0.5).clamp(0.0, (sh - 1) as f64);
        let x0 = sx.floor() as u32;
        let y0 = sy.floor() as u32;
        let x1 = (x0 + 1).min(sw - 1);
        let y1 = (y0 + 1).min(sh - 1);
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let mut out = [0u8; 3];
        for c in 0..3 {
            let lerp_top = image.get(x0, y0)[c] as f64 * (1.0 - fx) + image.get(x1, y0)[c] as f64 * fx;
            let lerp_bot = image.get(x0, y1)[c] as f64 * (1.0 - fx) + image.get(x1, y1)[c] as f64 * fx;
            out[c] = (lerp_top * (1.0 - fy) + lerp_bot * fy).round() as u8;
        }
        out
    })
}

/// Computes the full descriptor of an image under `config`.
///
/// The image is resized to the window, gamma-normalized, differentiated,
/// binned per cell and block-normalized; blocks are concatenated row-major.
/// The output length always equals [`HogConfig::descriptor_len`].
pub fn compute_descriptor(image: &RasterImage, config: &HogConfig) -> Result<Descriptor, HogError> {
    config.validate()?;
    let resized = resize_bilinear(image, config.window_w, config.window_h);
    let lum = gamma_normalize(&resized, config.gamma);
    let field = compute_gradients(&lum, config.signed)?;

    let (cells_x, cells_y) = (config.cells_x(), config.cells_y());
    let mut cells: Vec<Vec<f64>> = Vec::with_capacity((cells_x * cells_y) as usize);
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            cells.push(cell_histogram(&field, (cx * config.cell, cy * config.cell), config)?);
        }
    }

    let mut values = Vec::with_capacity(config.descriptor_len());
    let b = config.block;
    for by in 0..config.blocks_y() {
        for bx in 0..config.blocks_x() {
            let (cx0, cy0) = (bx * config.stride, by * config.stride);
            let mut block_cells: Vec<&[f64]> = Vec::with_capacity((b * b) as usize);
            for dy in 0..b {
                for dx in 0..b {
                    block_cells
                        .push(cells[((cy0 + dy) * cells_x + (cx0 + dx)) as usize].as_slice());
                }
            }
            values.extend(block_descriptor(&block_cells, config.clip));
        }
    }
    debug_assert_eq!(values.len(), config.descriptor_len());
    Ok(Descriptor { values, config_digest: config.digest() })
}

const DESCRIPTOR_MAGIC: &[u8; 4] = b"HOGF";
const BATCH_MAGIC: &[u8; 4] = b"HOGB";
const BATCH_VERSION: u16 = 1;

/// Writes a single descriptor: `HOGF`, u32 length, then f32 values, all
/// little-endian. Values narrow to f32.
pub fn write_descriptor(path: &Path, descriptor: &Descriptor) -> Result<(), HogError> {
    let mut bytes = Vec::with_capacity(8 + descriptor.values.len() * 4);
    bytes.extend_from_slice(DESCRIPTOR_MAGIC);
    bytes.extend_from_slice(&(descriptor.values.len() as u32).to_le_bytes());
    for v in &descriptor.values {
        bytes.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a [`write_descriptor`] file back.
pub fn read_descriptor(path: &Path) -> Result<Vec<f32>, HogError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 || &bytes[..4] != DESCRIPTOR_MAGIC {
        return Err(HogError::BadMagic);
    }
    if bytes.len() < 8 {
        return Err(HogError::Truncated);
    }
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let expected = 8 + count * 4;
    if bytes.len() < expected {
        return Err(HogError::Truncated);
    }
    if bytes.len() > expected {
        return Err(HogError::MalformedFile(format!(
            "{} trailing bytes after {count} values",
            bytes.len() - expected
        )));
    }
    Ok(bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Writes a descriptor batch.
///
/// Layout (little-endian): `HOGB`, u16 version, u16 reserved, u32 count,
/// u32 dimension, u64 config digest, count u32 manifest row indices,
/// count*dimension f32 values, u32 CRC-32 of everything before it.
pub fn write_batch(path: &Path, batch: &DescriptorBatch) -> Result<(), HogError> {
    assert_eq!(
        batch.data.len(),
        batch.rows.len() * batch.dim as usize,
        "batch data does not match rows x dim"
    );
    let mut bytes = Vec::with_capacity(24 + batch.rows.len() * (4 + batch.dim as usize * 4) + 4);
    bytes.extend_from_slice(BATCH_MAGIC);
    bytes.extend_from_slice(&BATCH_VERSION.to_le_bytes());
    bytes.extend_from_slice(&0u16.to_le_bytes());
    bytes.extend_from_slice(&(batch.rows.len() as u32).to_le_bytes());
    bytes.extend_from_slice(&batch.dim.to_le_bytes());
    bytes.extend_from_slice(&batch.digest.to_le_bytes());
    for r in &batch.rows {
        bytes.extend_from_slice(&r.to_le_bytes());
    }
    for v in &batch.data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32::checksum(&bytes);
    bytes.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a [`write_batch`] file back, verifying the checksum before parsing.
pub fn read_batch(path: &Path) -> Result<DescriptorBatch, HogError> {
    let bytes = fs::read(path)?;
    if bytes.len() < 4 || &bytes[..4] != BATCH_MAGIC {
        return Err(HogError::BadMagic);
    }
    if bytes.len() < 28 {
        return Err(HogError::Truncated);
    }
    let (body, crc_bytes) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(crc_bytes.try_into().unwrap());
    if crc32::checksum(body) != stored {
        return Err(HogError::ChecksumMismatch);
    }
    let version = u16::from_le_bytes(body[4..6].try_into().unwrap());
    if version != BATCH_VERSION {
        return Err(HogError::VersionUnsupported(version));
    }
    let count = u32::from_le_bytes(body[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(body[12..16].try_into().unwrap());
    let digest = u64::from_le_bytes(body[16..24].try_into().unwrap());
    let expected = 24 + count * 4 + count * dim as usize * 4;
    if body.len() != expected {
        return Err(HogError::MalformedFile(format!(
            "batch payload is {} bytes, expected {expected}",
            body.len()
        )));
    }
    let rows: Vec<u32> = body[24..24 + count * 4]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let data: Vec<f32> = body[24 + count * 4..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(DescriptorBatch { dim, digest, rows, data })
}
