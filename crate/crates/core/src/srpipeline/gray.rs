//! Gray images with intensities in `[0, 1]`.

use crate::datasynth::netpbm::GrayBytes;
use crate::datasynth::BinaryImage;
use crate::error::{Error, Result};

/// Row-major intensities, finite and clamped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    h: usize,
    w: usize,
    data: Vec<f64>,
}

impl GrayImage {
    /// Clamps every value to `[0, 1]`; non-finite values are rejected.
    pub fn new(h: usize, w: usize, data: Vec<f64>) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::Size(format!("gray image {h}×{w} is empty")));
        }
        if data.len() != h * w {
            return Err(Error::Size(format!(
                "{} values for a {h}×{w} gray image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite intensity at index {i}")));
        }
        let data = data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Ok(GrayImage { h, w, data })
    }

    pub fn filled(h: usize, w: usize, v: f64) -> Result<Self> {
        Self::new(h, w, vec![v; h * w])
    }

    /// Ink = 1, background = 0.
    pub fn from_binary(img: &BinaryImage) -> Self {
        GrayImage {
            h: img.h(),
            w: img.w(),
            data: img.bits().iter().map(|&b| b as f64).collect(),
        }
    }

    /// PGM stores white as 255; intensities here are ink, so values are
    /// inverted.
    pub fn from_bytes(img: &GrayBytes) -> Result<Self> {
        let data = img.data.iter().map(|&b| 1.0 - b as f64 / 255.0).collect();
        Self::new(img.h, img.w, data)
    }

    pub fn to_bytes(&self) -> GrayBytes {
        GrayBytes {
            h: self.h,
            w: self.w,
            data: self
                .data
                .iter()
                .map(|v| ((1.0 - v) * 255.0).round() as u8)
                .collect(),
        }
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.data[y * self.w + x]
    }

    pub fn crop(&self, y: usize, x: usize, h: usize, w: usize) -> Result<Self> {
        if h == 0 || w == 0 || y + h > self.h || x + w > self.w {
            return Err(Error::Dimension(format!(
                "crop {h}×{w} at ({y}, {x}) outside {}×{}",
                self.h, self.w
            )));
        }
        let mut data = Vec::with_capacity(h * w);
        for row in y..y + h {
            data.extend_from_slice(&self.data[row * self.w + x..row * self.w + x + w]);
        }
        Ok(GrayImage { h, w, data })
    }

    pub(crate) fn same_dims(&self, other: &GrayImage, what: &str) -> Result<()> {
        if (self.h, self.w) != (other.h, other.w) {
            return Err(Error::Shape(format!(
                "{what}: {}×{} vs {}×{}",
                self.h, self.w, other.h, other.w
            )));
        }
        Ok(())
    }
}
