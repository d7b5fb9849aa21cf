//! Power-law transform, binarization, PSNR, pixel F-score and the gamma
//! sweep.

use crate::datasynth::BinaryImage;
use crate::error::{Error, Result};
use crate::srpipeline::GrayImage;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// `out = c · in^γ`, then binarized at `threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaConfig {
    pub c: f64,
    pub gamma: f64,
    pub threshold: f64,
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig {
            c: 1.0,
            gamma: 1.0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl GammaConfig {
    pub fn with_gamma(gamma: f64) -> Result<Self> {
        let gc = GammaConfig {
            gamma,
            ..GammaConfig::default()
        };
        gc.validate()?;
        Ok(gc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::Parameter(format!("gamma {} must be positive", self.gamma)));
        }
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(Error::Parameter(format!("gain c {} must be non-negative", self.c)));
        }
        check_threshold(self.threshold)
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Parameter(format!("threshold {t} outside (0, 1)")));
    }
    Ok(())
}

/// Elementwise `c · x^γ`, clamped to `[0, 1]`.
pub fn power_law(img: &GrayImage, gc: &GammaConfig) -> Result<GrayImage> {
    gc.validate()?;
    if gc.gamma == 1.0 && gc.c == 1.0 {
        return Ok(img.clone());
    }
    let data = img.values().iter().map(|&x| gc.c * x.powf(gc.gamma)).collect();
    GrayImage::new(img.h(), img.w(), data)
}

/// Ink iff intensity `≥ threshold`.
pub fn binarize(img: &GrayImage, threshold: f64) -> Result<BinaryImage> {
    check_threshold(threshold)?;
    let bits = img.values().iter().map(|&v| u8::from(v >= threshold)).collect();
    BinaryImage::from_bits(img.h(), img.w(), bits)
}

/// `10·log10(1/mse)` for unit peak; `+∞` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_dims(b, "psnr")?;
    let n = a.values().len() as f64;
    let mse = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n;
    Ok(if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    })
}

/// PSNR with `inf` as the sentinel for identical images.
pub fn format_psnr(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p:.4}")
    }
}

/// Harmonic mean of ink precision and recall. Two inkless images score 1;
/// no true positives otherwise scores 0.
pub fn pixel_fscore(pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
    if (pred.h(), pred.w()) != (gt.h(), gt.w()) {
        return Err(Error::Shape(format!(
            "pixel_fscore: {}×{} vs {}×{}",
            pred.h(),
            pred.w(),
            gt.h(),
            gt.w()
        )));
    }
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for (&p, &g) in pred.bits().iter().zip(gt.bits()) {
        match (p, g) {
            (1, 1) => tp += 1,
            (1, 0) => fp += 1,
            (0, 1) => fneg += 1,
            _ => {}
        }
    }
    if tp + fp + fneg == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * tp as f64 / (2 * tp + fp + fneg) as f64)
}

/// Gray-domain PSNR and binarized F-score against a binary ground truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scores {
    pub psnr: f64,
    pub fscore: f64,
}

impl Scores {
    pub fn to_line(&self) -> String {
        format!("psnr={} fscore={:.6}", format_psnr(self.psnr), self.fscore)
    }
}

pub fn score(pred: &GrayImage, gt: &BinaryImage, gc: &GammaConfig) -> Result<Scores> {
    let psnr = psnr(pred, &GrayImage::from_binary(gt))?;
    let bin = binarize(&power_law(pred, gc)?, gc.threshold)?;
    Ok(Scores {
        psnr,
        fscore: pixel_fscore(&bin, gt)?,
    })
}

/// `γ = 0.1, 0.2, …, 1.0`.
pub fn gamma_grid() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaSweep {
    /// `(γ, F-score)` over the grid.
    pub scores: Vec<(f64, f64)>,
    pub best_gamma: f64,
    pub best_fscore: f64,
}

/// F-score for every grid γ; ties go to the larger γ (the milder change).
pub fn gamma_sweep(pred: &GrayImage, gt: &BinaryImage, threshold: f64) -> Result<GammaSweep> {
    let mut scores = Vec::new();
    for gamma in gamma_grid() {
        let gc = GammaConfig {
            gamma,
            threshold,
            ..GammaConfig::default()
        };
        let bin = binarize(&power_law(pred, &gc)?, threshold)?;
        scores.push((gamma, pixel_fscore(&bin, gt)?));
    }
    let (best_gamma, best_fscore) = scores
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, s| if s.1 >= best.1 { s } else { best });
    Ok(GammaSweep {
        scores,
        best_gamma,
        best_fscore,
    })
}

/// Nearest-neighbour enlargement as a gray image.
pub fn nearest_baseline(lr: &BinaryImage, r: usize) -> Result<GrayImage> {
    Ok(GrayImage::from_binary(&lr.upscale_nearest(r)?))
}
