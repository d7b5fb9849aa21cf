use crate::error::{Error, Result};
use crate::numtensor::{Dims, Tensor};

/// Periodic shuffle with upscale factor `r`. Has no trainable parameters.
///
/// Coordinates: output pixel `(row, col, c)` reads input pixel
/// `(row / r, col / r)` at channel `C·r·(row % r) + C·(col % r) + c`,
/// where `C` is the output channel count. The column offset varies fastest,
/// so for `r = 2` input channels `[a, b, c, d]` become the block
/// `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubpixelConfig {
    r: usize,
}

impl SubpixelConfig {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 {
            return Err(Error::Parameter("sub-pixel factor must be at least 1".into()));
        }
        Ok(SubpixelConfig { r })
    }

    pub fn r(&self) -> usize {
        self.r
    }
}

pub(crate) fn subpixel_output_dims(x: Dims, cfg: SubpixelConfig) -> Result<Dims> {
    let r2 = cfg.r * cfg.r;
    if x.c % r2 != 0 {
        return Err(Error::Shape(format!(
            "sub-pixel input has {} channels, not divisible by r² = {r2}",
            x.c
        )));
    }
    Dims::new(x.n, x.h * cfg.r, x.w * cfg.r, x.c / r2)
}

pub fn subpixel_forward(x: &Tensor, cfg: SubpixelConfig) -> Result<Tensor> {
    let od = subpixel_output_dims(x.dims(), cfg)?;
    let d = x.dims();
    let r = cfg.r;
    let c_out = od.c;
    let mut out = Tensor::zeros(od)?;
    let src = x.values();
    let dst = out.values_mut();
    for n in 0..d.n {
        for i in 0..d.h {
            for j in 0..d.w {
                let base = ((n * d.h + i) * d.w + j) * d.c;
                for (ch, &v) in src[base..base + d.c].iter().enumerate() {
                    let (dy, dx, c) = (ch / (c_out * r), (ch / c_out) % r, ch % c_out);
                    dst[((n * od.h + i * r + dy) * od.w + j * r + dx) * c_out + c] = v;
                }
            }
        }
    }
    Ok(out)
}

/// Inverse shuffle; the shuffle is a permutation so this is also its adjoint.
pub fn subpixel_backward(grad_out: &Tensor, cfg: SubpixelConfig) -> Result<Tensor> {
    let od = grad_out.dims();
    let r = cfg.r;
    if od.h % r != 0 || od.w % r != 0 {
        return Err(Error::Shape(format!(
            "sub-pixel grad_out {od} is not a multiple of r = {r}"
        )));
    }
    let d = Dims::new(od.n, od.h / r, od.w / r, od.c * r * r)?;
    let c_out = od.c;
    let mut gx = Tensor::zeros(d)?;
    let src = grad_out.values();
    let dst = gx.values_mut();
    for n in 0..d.n {
        for i in 0..d.h {
            for j in 0..d.w {
                let base = ((n * d.h + i) * d.w + j) * d.c;
                for (ch, v) in dst[base..base + d.c].iter_mut().enumerate() {
                    let (dy, dx, c) = (ch / (c_out * r), (ch / c_out) % r, ch % c_out);
                    *v = src[((n * od.h + i * r + dy) * od.w + j * r + dx) * c_out + c];
                }
            }
        }
    }
    Ok(gx)
}
