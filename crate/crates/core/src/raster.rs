//! In-memory RGB raster images.
//!
//! [`RasterImage`] is the interchange type between every pipeline stage:
//! 8-bit RGB, row-major, no alpha. Decoding file formats lives in
//! [`crate::ingest`]; this module owns the type itself plus PNG encoding
//! (used when writing synthetic datasets and audit masks).

use std::io;
use std::path::Path;

/// An 8-bit RGB image, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl RasterImage {
    /// Builds an image from row-major pixels.
    ///
    /// # Panics
    /// Panics if either dimension is zero or `pixels.len()` is not
    /// `width * height`; both indicate a programming error, not bad data.
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        assert_eq!(
            pixels.len(),
            width as usize * height as usize,
            "pixel buffer does not match {width}x{height}"
        );
        RasterImage { width, height, pixels }
    }

    /// Solid single-color image.
    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        Self::new(width, height, vec![color; width as usize * height as usize])
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Self {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, color: [u8; 3]) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize] = color;
    }

    /// Row-major pixel slice.
    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    /// Encodes the image as a PNG file.
    pub fn save_png(&self, path: &Path) -> io::Result<()> {
        let mut buf = image::RgbImage::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                buf.put_pixel(x, y, image::Rgb(self.get(x, y)));
            }
        }
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| match e {
                image::ImageError::IoError(io) => io,
                other => io::Error::new(io::ErrorKind::Other, other),
            })
    }
}
