use crate::error::{Error, Result};
use crate::numtensor::Rng;

/// Bitmap with 1 = ink, 0 = background.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    h: usize,
    w: usize,
    bits: Vec<u8>,
    /// Nominal dots per inch; metadata only.
    pub density: u32,
}

impl BinaryImage {
    pub fn blank(h: usize, w: usize) -> Result<Self> {
        Self::filled(h, w, 0)
    }

    pub fn filled(h: usize, w: usize, bit: u8) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::Dimension(format!("image dims {h}×{w} must be positive")));
        }
        let len = h
            .checked_mul(w)
            .ok_or_else(|| Error::Size(format!("image dims {h}×{w} overflow")))?;
        Ok(BinaryImage {
            h,
            w,
            bits: vec![bit.min(1); len],
            density: 0,
        })
    }

    /// From row-major pixels; any nonzero byte counts as ink.
    pub fn from_bits(h: usize, w: usize, bits: Vec<u8>) -> Result<Self> {
        if h == 0 || w == 0 || h.checked_mul(w) != Some(bits.len()) {
            return Err(Error::Dimension(format!(
                "{} pixels for a {h}×{w} image",
                bits.len()
            )));
        }
        Ok(BinaryImage {
            h,
            w,
            bits: bits.into_iter().map(|b| (b != 0) as u8).collect(),
            density: 0,
        })
    }

    pub fn from_fn(h: usize, w: usize, mut f: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut img = Self::blank(h, w)?;
        for y in 0..h {
            for x in 0..w {
                img.bits[y * w + x] = f(y, x) as u8;
            }
        }
        Ok(img)
    }

    pub fn with_density(mut self, density: u32) -> Self {
        self.density = density;
        self
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.bits[y * self.w + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, bit: bool) {
        self.bits[y * self.w + x] = bit as u8;
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn ink_ratio(&self) -> f64 {
        self.ink_count() as f64 / self.bits.len() as f64
    }

    /// Copy of the `h`×`w` window with top-left corner `(y, x)`.
    pub fn crop(&self, y: usize, x: usize, h: usize, w: usize) -> Result<Self> {
        if y + h > self.h || x + w > self.w {
            return Err(Error::Dimension(format!(
                "window {h}×{w} at ({y}, {x}) exceeds {}×{}",
                self.h, self.w
            )));
        }
        let mut out = Self::blank(h, w)?;
        for row in 0..h {
            let src = (y + row) * self.w + x;
            out.bits[row * w..(row + 1) * w].copy_from_slice(&self.bits[src..src + w]);
        }
        out.density = self.density;
        Ok(out)
    }

    /// Embed at the top-left of a larger background canvas.
    pub fn pad_to(&self, h: usize, w: usize) -> Result<Self> {
        if h < self.h || w < self.w {
            return Err(Error::Dimension(format!(
                "cannot pad {}×{} to {h}×{w}",
                self.h, self.w
            )));
        }
        let mut out = Self::blank(h, w)?;
        for row in 0..self.h {
            out.bits[row * w..row * w + self.w]
                .copy_from_slice(&self.bits[row * self.w..(row + 1) * self.w]);
        }
        out.density = self.density;
        Ok(out)
    }

    /// Nearest-neighbour enlargement by an integer factor.
    pub fn upscale_nearest(&self, r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("upscale factor must be positive".into()));
        }
        let mut out = Self::from_fn(self.h * r, self.w * r, |y, x| self.get(y / r, x / r) == 1)?;
        out.density = self.density * r as u32;
        Ok(out)
    }
}

/// Keep every `r`-th pixel: `out(y, x) = hr(r·y, r·x)`.
pub fn decimate(hr: &BinaryImage, r: usize) -> Result<BinaryImage> {
    if r == 0 || hr.h % r != 0 || hr.w % r != 0 {
        return Err(Error::Dimension(format!(
            "{}×{} image is not divisible by factor {r}",
            hr.h, hr.w
        )));
    }
    let mut out = BinaryImage::from_fn(hr.h / r, hr.w / r, |y, x| hr.get(r * y, r * x) == 1)?;
    out.density = hr.density / r as u32;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskParams {
    pub mu: f64,
    pub sigma: f64,
    pub threshold: f64,
    pub seed: u64,
}

impl MaskParams {
    /// `N(0, 1)` draws cut at 0.
    pub fn standard(seed: u64) -> Self {
        MaskParams {
            mu: 0.0,
            sigma: 1.0,
            threshold: 0.0,
            seed,
        }
    }
}

/// Pixel is 1 where a `N(mu, sigma²)` draw is at least `threshold`.
pub fn random_mask(h: usize, w: usize, p: &MaskParams) -> Result<BinaryImage> {
    if !(p.sigma > 0.0) || !p.sigma.is_finite() {
        return Err(Error::Parameter(format!("mask sigma must be positive, got {}", p.sigma)));
    }
    let mut rng = Rng::new(p.seed);
    let mut img = BinaryImage::blank(h, w)?;
    for b in img.bits.iter_mut() {
        *b = (rng.gaussian(p.mu, p.sigma)? >= p.threshold) as u8;
    }
    Ok(img)
}

/// Elementwise product (logical AND).
pub fn apply_mask(lr: &BinaryImage, mask: &BinaryImage) -> Result<BinaryImage> {
    if (lr.h, lr.w) != (mask.h, mask.w) {
        return Err(Error::Dimension(format!(
            "mask {}×{} does not match image {}×{}",
            mask.h, mask.w, lr.h, lr.w
        )));
    }
    let mut out = lr.clone();
    for (o, m) in out.bits.iter_mut().zip(&mask.bits) {
        *o &= m;
    }
    Ok(out)
}

/// Nearest-neighbour rotation by `degrees` (counter-clockwise on screen)
/// about the image centre; pixels mapped from outside become background.
pub fn rotate_nearest(img: &BinaryImage, degrees: f64) -> BinaryImage {
    let theta = degrees.rem_euclid(360.0).to_radians();
    let (s, c) = if theta == 0.0 { (0.0, 1.0) } else { theta.sin_cos() };
    let cy = img.h as f64 / 2.0;
    let cx = img.w as f64 / 2.0;
    let mut out = BinaryImage::blank(img.h, img.w).expect("dims of an existing image");
    out.density = img.density;
    for y in 0..img.h {
        let dy = y as f64 + 0.5 - cy;
        for x in 0..img.w {
            let dx = x as f64 + 0.5 - cx;
            // Inverse map: rotate the destination point by -theta.
            let sx = c * dx - s * dy + cx;
            let sy = s * dx + c * dy + cy;
            if sx >= 0.0 && sy >= 0.0 {
                let (ix, iy) = (sx.floor() as usize, sy.floor() as usize);
                if ix < img.w && iy < img.h {
                    out.bits[y * img.w + x] = img.get(iy, ix);
                }
            }
        }
    }
    out
}

/// Default rotation set: 15 angles from −14° to +14° in 2° steps.
pub fn default_rotations() -> Vec<f64> {
    (0..15).map(|i| -14.0 + 2.0 * i as f64).collect()
}

/// Every rotation of every glyph bitmap, glyph-major.
pub fn render_glyph_set(glyphs: &[BinaryImage], rotations: &[f64]) -> Result<Vec<BinaryImage>> {
    if glyphs.is_empty() {
        return Err(Error::Input("empty glyph set".into()));
    }
    Ok(glyphs
        .iter()
        .flat_map(|g| rotations.iter().map(move |&a| rotate_nearest(g, a)))
        .collect())
}
