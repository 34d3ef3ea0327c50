//! RGB rasters, pixel masks and their PPM/PGM encodings.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, Luma, Rgb};

use crate::error::{domain, Result};

/// Row-major RGB raster with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub const CHANNELS: usize = 3;

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self { width, height, data }
    }

    /// Builds an image from raw row-major RGB values, clamping into `[0, 1]`.
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(domain(format!(
                "raw buffer has {} values, expected {}",
                data.len(),
                width * height * 3
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(domain("image channels must be finite"));
        }
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(Self { width, height, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    /// Length of the flattened pixel-channel vector.
    pub fn feature_len(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[i + c] = rgb[c].clamp(0.0, 1.0);
        }
    }

    pub fn pixel(&self, index: usize) -> [f64; 3] {
        let i = index * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn to_rgb8(&self) -> image::RgbImage {
        image::RgbImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let p = self.get(x as usize, y as usize);
            Rgb(p.map(to_u8))
        })
    }

    pub fn from_rgb8(img: &image::RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let data = img
            .pixels()
            .flat_map(|p| p.0.map(|c| c as f64 / 255.0))
            .collect();
        Self {
            width: w as usize,
            height: h as usize,
            data,
        }
    }

    /// Writes binary PPM (P6, maxval 255).
    pub fn save_ppm(&self, path: impl AsRef<Path>) -> Result<()> {
        let img = self.to_rgb8();
        write_pnm(path.as_ref(), img.as_raw(), img.width(), img.height(), PnmSubtype::Pixmap(SampleEncoding::Binary))
    }

    pub fn load_ppm(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?.to_rgb8();
        Ok(Self::from_rgb8(&img))
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a grayscale map with values in `[0, 1]` as binary PGM (P5).
pub fn save_pgm(width: usize, height: usize, values: &[f64], path: impl AsRef<Path>) -> Result<()> {
    if values.len() != width * height {
        return Err(domain("PGM value count does not match dimensions"));
    }
    let img = image::GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([to_u8(values[y as usize * width + x as usize])])
    });
    write_pnm(path.as_ref(), img.as_raw(), img.width(), img.height(), PnmSubtype::Graymap(SampleEncoding::Binary))
}

fn write_pnm(path: &Path, raw: &[u8], w: u32, h: u32, subtype: PnmSubtype) -> Result<()> {
    let color = match subtype {
        PnmSubtype::Graymap(_) => ExtendedColorType::L8,
        _ => ExtendedColorType::Rgb8,
    };
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file).with_subtype(subtype).write_image(raw, w, h, color)?;
    Ok(())
}

/// Writes integer labels as PGM gray levels (wrapping modulo 256).
pub fn save_label_pgm(width: usize, height: usize, labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    if labels.len() != width * height {
        return Err(domain("label count does not match dimensions"));
    }
    let img = image::GrayImage::from_fn(width as u32, height as u32, |x, y| {
        Luma([(labels[y as usize * width + x as usize] % 256) as u8])
    });
    write_pnm(path.as_ref(), img.as_raw(), img.width(), img.height(), PnmSubtype::Graymap(SampleEncoding::Binary))
}

/// Per-pixel boolean mask; `true` marks a missing (held-out) pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(domain("mask length does not match dimensions"));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { width, height, bits }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.bits[index] = value;
    }

    pub fn count_missing(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn invert(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn matches(&self, image: &Image) -> bool {
        self.width == image.width() && self.height == image.height()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_roundtrip_quantizes_to_255_levels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        let mut img = Image::filled(3, 2, [0.2, 0.5, 1.0]);
        img.set(1, 1, [0.0, 1.0, 0.0]);
        img.save_ppm(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], b"P6");
        let back = Image::load_ppm(&path).unwrap();
        assert_eq!(back.width(), 3);
        for (a, b) in img.as_slice().iter().zip(back.as_slice()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn pgm_header_is_p5() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        save_pgm(2, 2, &[0.0, 0.25, 0.5, 1.0], &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..2], b"P5");
        assert_eq!(*bytes.last().unwrap(), 255);
    }

    #[test]
    fn from_raw_rejects_bad_length_and_nan() {
        assert!(Image::from_raw(2, 2, vec![0.0; 11]).is_err());
        let mut v = vec![0.0; 12];
        v[3] = f64::NAN;
        assert!(Image::from_raw(2, 2, v).is_err());
    }
}
