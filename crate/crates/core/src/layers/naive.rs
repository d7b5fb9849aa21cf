//! Straight-loop reference implementations. These are the oracles the fast
//! paths are checked against and are not used on any hot path.

use crate::error::Result;
use crate::layers::conv::{bias_dims, conv2d_output_dims, tconv2d_output_dims, ConvGrads, ConvParams};
use crate::layers::SubpixelConfig;
use crate::numtensor::Tensor;

/// Six nested loops over `(n, oy, ox, co, ky, kx, ci)`.
pub fn conv2d_naive(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let od = conv2d_output_dims(x.dims(), p)?;
    let k = p.k();
    let mut out = Tensor::zeros(od)?;
    for n in 0..od.n {
        for oy in 0..od.h {
            for ox in 0..od.w {
                for co in 0..od.c {
                    let mut acc = p.bias.values()[co];
                    for ky in 0..k {
                        for kx in 0..k {
                            for ci in 0..p.c_in() {
                                acc += x.at(n, oy + ky, ox + kx, ci) * p.kernel.at(ky, kx, ci, co);
                            }
                        }
                    }
                    out.set(n, oy, ox, co, acc);
                }
            }
        }
    }
    Ok(out)
}

pub fn conv2d_backward_naive(x: &Tensor, p: &ConvParams, grad_out: &Tensor) -> Result<ConvGrads> {
    let od = conv2d_output_dims(x.dims(), p)?;
    if grad_out.dims() != od {
        return Err(crate::error::Error::Shape(format!(
            "conv grad_out {} does not match output {od}",
            grad_out.dims()
        )));
    }
    let k = p.k();
    let mut gx = Tensor::zeros(x.dims())?;
    let mut gk = Tensor::zeros(p.kernel.dims())?;
    let mut gb = Tensor::zeros(bias_dims(p.c_out())?)?;
    for n in 0..od.n {
        for oy in 0..od.h {
            for ox in 0..od.w {
                for co in 0..od.c {
                    let g = grad_out.at(n, oy, ox, co);
                    let b = gb.at(0, 0, 0, co);
                    gb.set(0, 0, 0, co, b + g);
                    for ky in 0..k {
                        for kx in 0..k {
                            for ci in 0..p.c_in() {
                                let xi = gx.index(n, oy + ky, ox + kx, ci);
                                gx.values_mut()[xi] += g * p.kernel.at(ky, kx, ci, co);
                                let ki = gk.index(ky, kx, ci, co);
                                gk.values_mut()[ki] += g * x.at(n, oy + ky, ox + kx, ci);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        grad_x: gx,
        grad_kernel: gk,
        grad_bias: gb,
    })
}

/// Transposed convolution written as a valid cross-correlation of the
/// input zero-padded by `k-1` on every side with the spatially flipped kernel.
pub fn tconv2d_naive(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    tconv2d_padded(x, p, true)
}

/// The padded-correlation form with an optional kernel flip. Without the
/// flip the result is not the adjoint of convolution; kept for mutation tests.
pub(crate) fn tconv2d_padded(x: &Tensor, p: &ConvParams, flip: bool) -> Result<Tensor> {
    let od = tconv2d_output_dims(x.dims(), p)?;
    let d = x.dims();
    let k = p.k();
    let pad = k - 1;
    let mut out = Tensor::zeros(od)?;
    for n in 0..od.n {
        for y in 0..od.h {
            for xx in 0..od.w {
                for co in 0..od.c {
                    let mut acc = p.bias.values()[co];
                    for u in 0..k {
                        for v in 0..k {
                            // padded coordinate y+u maps to input row y+u-pad
                            let (iy, ix) = (y + u, xx + v);
                            if iy < pad || ix < pad || iy - pad >= d.h || ix - pad >= d.w {
                                continue;
                            }
                            let (ky, kx) = if flip { (k - 1 - u, k - 1 - v) } else { (u, v) };
                            for ci in 0..d.c {
                                acc += x.at(n, iy - pad, ix - pad, ci) * p.kernel.at(ky, kx, ci, co);
                            }
                        }
                    }
                    out.set(n, y, xx, co, acc);
                }
            }
        }
    }
    Ok(out)
}

/// Loops over the scatter definition of the transposed convolution.
pub fn tconv2d_backward_naive(x: &Tensor, p: &ConvParams, grad_out: &Tensor) -> Result<ConvGrads> {
    let d = x.dims();
    let od = tconv2d_output_dims(d, p)?;
    if grad_out.dims() != od {
        return Err(crate::error::Error::Shape(format!(
            "tconv grad_out {} does not match output {od}",
            grad_out.dims()
        )));
    }
    let k = p.k();
    let mut gx = Tensor::zeros(d)?;
    let mut gk = Tensor::zeros(p.kernel.dims())?;
    let mut gb = Tensor::zeros(bias_dims(p.c_out())?)?;
    let god = grad_out.dims();
    for n in 0..god.n {
        for y in 0..god.h {
            for xx in 0..god.w {
                for co in 0..god.c {
                    let b = gb.at(0, 0, 0, co);
                    gb.set(0, 0, 0, co, b + grad_out.at(n, y, xx, co));
                }
            }
        }
        for i in 0..d.h {
            for j in 0..d.w {
                for ky in 0..k {
                    for kx in 0..k {
                        for ci in 0..d.c {
                            for co in 0..p.c_out() {
                                let g = grad_out.at(n, i + ky, j + kx, co);
                                let xi = gx.index(n, i, j, ci);
                                gx.values_mut()[xi] += g * p.kernel.at(ky, kx, ci, co);
                                let ki = gk.index(ky, kx, ci, co);
                                gk.values_mut()[ki] += g * x.at(n, i, j, ci);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(ConvGrads {
        grad_x: gx,
        grad_kernel: gk,
        grad_bias: gb,
    })
}

/// Periodic shuffle evaluated pixel by pixel from the index formula
/// `PS(I)[row, col, c] = I[row/r, col/r, C·r·(row mod r) + C·(col mod r) + c]`.
pub fn subpixel_reference(x: &Tensor, cfg: SubpixelConfig) -> Result<Tensor> {
    let od = crate::layers::subpixel::subpixel_output_dims(x.dims(), cfg)?;
    let r = cfg.r();
    let c_out = od.c;
    let mut out = Tensor::zeros(od)?;
    for n in 0..od.n {
        for row in 0..od.h {
            for col in 0..od.w {
                for c in 0..c_out {
                    let src_c = c_out * r * (row % r) + c_out * (col % r) + c;
                    out.set(n, row, col, c, x.at(n, row / r, col / r, src_c));
                }
            }
        }
    }
    Ok(out)
}
