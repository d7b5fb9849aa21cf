//! Full-page inference: overlapping 16×16 tiles, overlap-averaged stitching,
//! power-law post-processing, binarization and scoring.

mod gray;
mod metrics;

use rayon::prelude::*;

use crate::datasynth::BinaryImage;
use crate::error::{Error, Result};
use crate::models::{ModelGraph, INPUT_SIDE};
use crate::numtensor::{Dims, Tensor};
use crate::trainer::unit_values;

pub use gray::GrayImage;
pub use metrics::{
    binarize, format_psnr, gamma_grid, gamma_sweep, nearest_baseline, pixel_fscore, power_law,
    psnr, score, GammaConfig, GammaSweep, Scores, DEFAULT_THRESHOLD,
};

pub const DEFAULT_STRIDE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TileConfig {
    /// LR pixels between tile origins.
    pub stride: usize,
}

impl Default for TileConfig {
    fn default() -> Self {
        TileConfig {
            stride: DEFAULT_STRIDE,
        }
    }
}

impl TileConfig {
    pub fn new(stride: usize) -> Result<Self> {
        let tc = TileConfig { stride };
        tc.validate()?;
        Ok(tc)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=INPUT_SIDE).contains(&self.stride) {
            return Err(Error::Parameter(format!(
                "tile stride {} outside 1..={INPUT_SIDE}",
                self.stride
            )));
        }
        Ok(())
    }
}

/// Smallest side `≥ n` of the form `16 + k·stride`.
fn padded_side(n: usize, stride: usize) -> usize {
    INPUT_SIDE + (n - INPUT_SIDE).div_ceil(stride) * stride
}

/// Tile origins along one axis of a padded side.
fn origins(padded: usize, stride: usize) -> Vec<usize> {
    (0..=(padded - INPUT_SIDE) / stride).map(|k| k * stride).collect()
}

/// Super-resolve `page` tile by tile. Tiles run in parallel; their outputs
/// are accumulated in tile order, so the result is independent of the
/// thread count.
pub fn upscale_page(page: &BinaryImage, graph: &ModelGraph, tc: &TileConfig) -> Result<GrayImage> {
    tc.validate()?;
    if page.h() < INPUT_SIDE || page.w() < INPUT_SIDE {
        return Err(Error::Input(format!(
            "page {}×{} is smaller than one {INPUT_SIDE}×{INPUT_SIDE} tile",
            page.h(),
            page.w()
        )));
    }
    let r = graph.meta().r;
    let tile_in = Dims::new(1, INPUT_SIDE, INPUT_SIDE, 1)?;
    let tile_out = graph.output_dims(tile_in)?;
    let side = INPUT_SIDE * r;
    if (tile_out.h, tile_out.w, tile_out.c) != (side, side, 1) {
        return Err(Error::Config(format!(
            "model output {tile_out} is not {side}×{side}×1"
        )));
    }
    let (ph, pw) = (padded_side(page.h(), tc.stride), padded_side(page.w(), tc.stride));
    let padded = page.pad_to(ph, pw)?;
    let tiles: Vec<(usize, usize)> = origins(ph, tc.stride)
        .into_iter()
        .flat_map(|y| origins(pw, tc.stride).into_iter().map(move |x| (y, x)))
        .collect();
    let outputs: Vec<Tensor> = tiles
        .par_iter()
        .map(|&(y, x)| {
            let lr = padded.crop(y, x, INPUT_SIDE, INPUT_SIDE)?;
            graph.forward(&Tensor::from_vec(tile_in, unit_values(&lr))?)
        })
        .collect::<Result<_>>()?;
    let (oh, ow) = (ph * r, pw * r);
    let mut sum = vec![0.0; oh * ow];
    let mut count = vec![0u32; oh * ow];
    for (&(y, x), out) in tiles.iter().zip(&outputs) {
        let vals = out.values();
        for ty in 0..side {
            let row = (r * y + ty) * ow + r * x;
            for tx in 0..side {
                sum[row + tx] += vals[ty * side + tx];
                count[row + tx] += 1;
            }
        }
    }
    let data = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| s / c as f64)
        .collect();
    GrayImage::new(oh, ow, data)?.crop(0, 0, page.h() * r, page.w() * r)
}
