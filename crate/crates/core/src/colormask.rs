//! HSV color-range filtering.
//!
//! Pressure-topography plots encode pressure with a warm-to-cool palette:
//! the contraction signal lives in the red/orange/yellow (and lowest-green)
//! hues, while the background is cool. Filtering to a keep-list of HSV
//! ranges before computing gradients removes background texture that would
//! otherwise pollute the descriptor.
//!
//! HSV here follows the 8-bit convention of mainstream imaging libraries:
//! hue in `[0, 180]` (degrees halved), saturation and value in `[0, 255]`,
//! all rounded to integers. The integer quantization matters — the default
//! keep-list ranges are defined on integer hues and tile the warm hue band
//! without gaps precisely because adjacent ranges meet on consecutive
//! integers.

use std::fs::File;
use std::io;
use std::path::Path;

use crate::raster::RasterImage;

/// A quantized HSV triple: `h` in `[0, 180]`, `s` and `v` in `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hsv {
    pub h: u8,
    pub s: u8,
    pub v: u8,
}

impl Hsv {
    pub fn new(h: u8, s: u8, v: u8) -> Self {
        Hsv { h, s, v }
    }
}

/// Converts an RGB pixel to quantized HSV.
///
/// Ties in the channel maximum resolve in R, G, B order; an achromatic pixel
/// (zero delta) gets hue 0, and a black pixel saturation 0. Rounding is
/// half-away-from-zero on every channel.
pub fn rgb_to_hsv(r: u8, g: u8, b: u8) -> Hsv {
    let v = r.max(g).max(b);
    let min = r.min(g).min(b);
    if v == 0 {
        return Hsv::new(0, 0, 0);
    }
    if v == min {
        return Hsv::new(0, 0, v);
    }
    let delta = (v - min) as f64;
    let s = (255.0 * delta / v as f64).round() as u8;
    let (rf, gf, bf) = (r as f64, g as f64, b as f64);
    let mut hue = if v == r {
        60.0 * (gf - bf) / delta
    } else if v == g {
        120.0 + 60.0 * (bf - rf) / delta
    } else {
        240.0 + 60.0 * (rf - gf) / delta
    };
    if hue < 0.0 {
        hue += 360.0;
    }
    Hsv::new((hue / 2.0).round() as u8, s, v)
}

/// An inclusive HSV box with a human-readable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorRange {
    pub name: String,
    pub lower: Hsv,
    pub upper: Hsv,
}

impl ColorRange {
    /// Validates hue domain (`<= 180`) and channel ordering on s and v.
    pub fn new(name: &str, lower: Hsv, upper: Hsv) -> Result<Self, ColorMaskError> {
        if lower.h > 180 || upper.h > 180 {
            return Err(ColorMaskError::InvalidRange(format!(
                "{name}: hue must be within [0, 180]"
            )));
        }
        if lower.s > upper.s || lower.v > upper.v {
            return Err(ColorMaskError::InvalidRange(format!(
                "{name}: lower saturation/value must not exceed upper"
            )));
        }
        Ok(ColorRange { name: name.to_string(), lower, upper })
    }

    /// Inclusive membership on all three channels.
    pub fn contains(&self, c: Hsv) -> bool {
        (self.lower.h..=self.upper.h).contains(&c.h)
            && (self.lower.s..=self.upper.s).contains(&c.s)
            && (self.lower.v..=self.upper.v).contains(&c.v)
    }
}

/// A non-empty keep-list of HSV ranges; a pixel is kept if any range
/// contains it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorList {
    ranges: Vec<ColorRange>,
}

impl ColorList {
    pub fn new(ranges: Vec<ColorRange>) -> Result<Self, ColorMaskError> {
        if ranges.is_empty() {
            return Err(ColorMaskError::EmptyColorList);
        }
        Ok(ColorList { ranges })
    }

    pub fn ranges(&self) -> &[ColorRange] {
        &self.ranges
    }

    pub fn contains(&self, c: Hsv) -> bool {
        self.ranges.iter().any(|r| r.contains(c))
    }

    /// Copy of the list without the named range; `None` if dropping it would
    /// leave the list empty or the name is absent.
    pub fn without(&self, name: &str) -> Option<ColorList> {
        let kept: Vec<ColorRange> =
            self.ranges.iter().filter(|r| r.name != name).cloned().collect();
        if kept.len() == self.ranges.len() {
            return None;
        }
        ColorList::new(kept).ok()
    }
}

/// The default warm-palette keep-list.
///
/// Red wraps the hue circle, so it contributes two boxes; orange and yellow
/// continue seamlessly (adjacent ranges meet on consecutive integer hues),
/// and the lowest green band is included because the palette renders
/// moderate pressures there.
pub fn default_color_list() -> ColorList {
    let ranges = vec![
        ("red-high", (156, 43, 46), (180, 255, 255)),
        ("red-low", (0, 43, 46), (10, 255, 255)),
        ("orange", (11, 43, 46), (25, 255, 255)),
        ("yellow", (26, 43, 46), (34, 255, 255)),
        ("green", (35, 43, 46), (45, 255, 255)),
    ];
    let ranges = ranges
        .into_iter()
        .map(|(name, lo, hi)| {
            ColorRange::new(name, Hsv::new(lo.0, lo.1, lo.2), Hsv::new(hi.0, hi.1, hi.2))
                .expect("default ranges are valid")
        })
        .collect();
    ColorList::new(ranges).expect("default list is non-empty")
}

/// A boolean keep/remove mask aligned with an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        PixelMask { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    /// Number of kept pixels.
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Writes the mask as a 1-bit grayscale PNG (kept = white) for visual
    /// audit.
    pub fn save_png(&self, path: &Path) -> io::Result<()> {
        let file = File::create(path)?;
        let mut enc = png::Encoder::new(io::BufWriter::new(file), self.width, self.height);
        enc.set_color(png::ColorType::Grayscale);
        enc.set_depth(png::BitDepth::One);
        let mut writer = enc.write_header().map_err(into_io)?;
        let stride = (self.width as usize + 7) / 8;
        let mut data = vec![0u8; stride * self.height as usize];
        for y in 0..self.height as usize {
            for x in 0..self.width as usize {
                if self.bits[y * self.width as usize + x] {
                    data[y * stride + x / 8] |= 0x80 >> (x % 8);
                }
            }
        }
        writer.write_image_data(&data).map_err(into_io)
    }
}

fn into_io(e: png::EncodingError) -> io::Error {
    match e {
        png::EncodingError::IoError(io) => io,
        other => io::Error::new(io::ErrorKind::Other, other),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ColorMaskError {
    #[error("invalid color range: {0}")]
    InvalidRange(String),
    #[error("color list must contain at least one range")]
    EmptyColorList,
    #[error("mask is {mask_w}x{mask_h} but image is {image_w}x{image_h}")]
    DimensionMismatch { image_w: u32, image_h: u32, mask_w: u32, mask_h: u32 },
    #[error("color list line {0} is malformed: {1}")]
    MalformedLine(usize, String),
}

/// Marks every pixel whose HSV value falls in any range of the keep-list.
pub fn build_mask(image: &RasterImage, list: &ColorList) -> PixelMask {
    let mut bits = Vec::with_capacity(image.pixels().len());
    for &[r, g, b] in image.pixels() {
        bits.push(list.contains(rgb_to_hsv(r, g, b)));
    }
    PixelMask::new(image.width(), image.height(), bits)
}

/// Keeps masked-in pixels unchanged and blacks out the rest.
///
/// Removed pixels become `(0, 0, 0)` so they contribute zero luminance — and
/// therefore zero gradient magnitude away from mask boundaries — to the
/// descriptor stage.
pub fn apply_mask(image: &RasterImage, mask: &PixelMask) -> Result<RasterImage, ColorMaskError> {
    if image.width() != mask.width() || image.height() != mask.height() {
        return Err(ColorMaskError::DimensionMismatch {
            image_w: image.width(),
            image_h: image.height(),
            mask_w: mask.width(),
            mask_h: mask.height(),
        });
    }
    let pixels = image
        .pixels()
        .iter()
        .zip(mask.bits())
        .map(|(&px, &keep)| if keep { px } else { [0, 0, 0] })
        .collect();
    Ok(RasterImage::new(image.width(), image.height(), pixels))
}

/// Parses a keep-list override file.
///
/// One range per line: `name,h_lo,s_lo,v_lo,h_hi,s_hi,v_hi`; `#` comments
/// and blank lines are ignored.
pub fn parse_color_list(text: &str) -> Result<ColorList, ColorMaskError> {
    let mut ranges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(ColorMaskError::MalformedLine(
                line_no,
                format!("expected 7 comma-separated fields, found {}", fields.len()),
            ));
        }
        let mut nums = [0u8; 6];
        for (i, f) in fields[1..].iter().enumerate() {
            nums[i] = f.parse().map_err(|_| {
                ColorMaskError::MalformedLine(line_no, format!("{f:?} is not a byte value"))
            })?;
        }
        ranges.push(ColorRange::new(
            fields[0],
            Hsv::new(nums[0], nums[1], nums[2]),
            Hsv::new(nums[3], nums[4], nums[5]),
        )?);
    }
    ColorList::new(ranges)
}
