use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, fill: u8) -> Result<Self> {
        Self::from_pixels(width, height, vec![fill; width.saturating_mul(height)])
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("image dimensions must be positive, got {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "expected {} pixels for {width}x{height}, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    /// Rounds and clamps a float buffer into a valid image.
    pub fn from_f64(width: usize, height: usize, values: &[f64]) -> Result<Self> {
        let pixels = values.iter().map(|&v| quantize(v)).collect();
        Self::from_pixels(width, height, pixels)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    /// Writes the raw debug format: a `W H` text line followed by the
    /// row-major bytes.
    pub fn write_raw<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.width, self.height)?;
        out.write_all(&self.pixels)
    }

    pub fn read_raw<R: BufRead>(mut input: R) -> Result<Self> {
        let mut header = String::new();
        input
            .read_line(&mut header)
            .map_err(|e| Error::InvalidInput(format!("raw image header: {e}")))?;
        let mut it = header.split_whitespace().map(str::parse::<usize>);
        let (Some(Ok(w)), Some(Ok(h)), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::InvalidInput(format!("bad raw image header `{}`", header.trim_end())));
        };
        let mut pixels = Vec::with_capacity(w.saturating_mul(h));
        input
            .read_to_end(&mut pixels)
            .map_err(|e| Error::InvalidInput(format!("raw image body: {e}")))?;
        Self::from_pixels(w, h, pixels)
    }

    pub fn save_raw(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_raw(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load_raw(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_raw(std::io::BufReader::new(file))
    }
}

pub(crate) fn quantize(v: f64) -> u8 {
    if v.is_nan() {
        0
    } else {
        v.round().clamp(0.0, 255.0) as u8
    }
}

fn shift_row(src: &[u8], dst: &mut [u8], px: i64) {
    let w = src.len() as i64;
    for (x, d) in dst.iter_mut().enumerate() {
        let sx = (x as i64 - px).clamp(0, w - 1);
        *d = src[sx as usize];
    }
}

/// Moves the content `px` columns to the right (negative: left), replicating
/// edge columns.
pub fn shift_columns(img: &Image, px: i64) -> Image {
    shear_translate(img, &vec![px; img.height])
}

/// Shifts every row by its own column offset; `shifts.len()` must equal the
/// image height.
pub fn shear_translate(img: &Image, shifts: &[i64]) -> Image {
    assert_eq!(shifts.len(), img.height, "one shift per row");
    let mut out = img.clone();
    for (y, &s) in shifts.iter().enumerate() {
        let range = y * img.width..(y + 1) * img.width;
        shift_row(&img.pixels[range.clone()], &mut out.pixels[range], s);
    }
    out
}

/// Re-centers the frame after the camera moved `lateral_delta` meters to the
/// right: content moves `round(px_per_m * lateral_delta)` columns left.
pub fn translate_image(img: &Image, lateral_delta: f64, px_per_m: f64) -> Image {
    shift_columns(img, -(px_per_m * lateral_delta).round() as i64)
}
