//! Valid cross-correlation and its adjoint, the unit-stride transposed
//! convolution.
//!
//! Kernels are stored `(k, k, c_in, c_out)` in a [`Tensor`] whose four axes
//! are reused as `(ky, kx, ci, co)`. Both layers share that layout: for a
//! transposed convolution `c_in` is the channel count of its own input.
//!
//! Stride is always 1 and padding always 0; neither is representable.

use crate::error::{Error, Result};
use crate::layers::gemm::{gemm, MatRef};
use crate::numtensor::{Dims, Rng, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvParams {
    pub kernel: Tensor,
    pub bias: Tensor,
}

/// Gradients of a convolution-like layer with respect to its input and
/// parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub grad_x: Tensor,
    pub grad_kernel: Tensor,
    pub grad_bias: Tensor,
}

pub(crate) fn kernel_dims(k: usize, c_in: usize, c_out: usize) -> Result<Dims> {
    Dims::new(k, k, c_in, c_out)
}

pub(crate) fn bias_dims(c: usize) -> Result<Dims> {
    Dims::new(1, 1, 1, c)
}

impl ConvParams {
    pub fn zeros(k: usize, c_in: usize, c_out: usize) -> Result<Self> {
        Ok(ConvParams {
            kernel: Tensor::zeros(kernel_dims(k, c_in, c_out)?)?,
            bias: Tensor::zeros(bias_dims(c_out)?)?,
        })
    }

    pub fn from_parts(kernel: Tensor, bias: Tensor) -> Result<Self> {
        let kd = kernel.dims();
        if kd.n != kd.h {
            return Err(Error::Shape(format!("kernel {kd} is not square")));
        }
        if bias.dims() != bias_dims(kd.c)? {
            return Err(Error::Shape(format!(
                "bias {} does not match kernel {kd}",
                bias.dims()
            )));
        }
        Ok(ConvParams { kernel, bias })
    }

    /// Zero-mean Gaussian kernel with std `sqrt(2 / (k·k·c_in))`, zero bias.
    pub fn he_normal(k: usize, c_in: usize, c_out: usize, rng: &mut Rng) -> Result<Self> {
        let mut p = Self::zeros(k, c_in, c_out)?;
        let std = (2.0 / (k * k * c_in) as f64).sqrt();
        for v in p.kernel.values_mut() {
            *v = std * rng.standard_normal();
        }
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.kernel.dims().n
    }

    pub fn c_in(&self) -> usize {
        self.kernel.dims().w
    }

    pub fn c_out(&self) -> usize {
        self.kernel.dims().c
    }

    pub fn param_count(&self) -> usize {
        self.kernel.len() + self.bias.len()
    }

    /// Same taps with the channel axes swapped, `(k, k, c_out, c_in)`, and
    /// zero bias. A convolution with these parameters is the adjoint of the
    /// transposed convolution with `self` (and vice versa).
    pub fn channel_transposed(&self) -> ConvParams {
        let (k, ci, co) = (self.k(), self.c_in(), self.c_out());
        let mut out = ConvParams::zeros(k, co, ci).expect("dims already validated");
        let src = self.kernel.values();
        let dst = out.kernel.values_mut();
        for kk in 0..k * k {
            for i in 0..ci {
                for o in 0..co {
                    dst[(kk * co + o) * ci + i] = src[(kk * ci + i) * co + o];
                }
            }
        }
        out
    }

    /// Kernel rearranged as a `c_in × (k·k·c_out)` row-major matrix.
    fn input_major_kernel(&self) -> Vec<f64> {
        let (k, ci, co) = (self.k(), self.c_in(), self.c_out());
        let src = self.kernel.values();
        let mut dst = vec![0.0; src.len()];
        for kk in 0..k * k {
            for i in 0..ci {
                let s = (kk * ci + i) * co;
                let d = i * k * k * co + kk * co;
                dst[d..d + co].copy_from_slice(&src[s..s + co]);
            }
        }
        dst
    }

    fn from_input_major(values: &[f64], k: usize, ci: usize, co: usize) -> Vec<f64> {
        let mut dst = vec![0.0; values.len()];
        for kk in 0..k * k {
            for i in 0..ci {
                let s = i * k * k * co + kk * co;
                let d = (kk * ci + i) * co;
                dst[d..d + co].copy_from_slice(&values[s..s + co]);
            }
        }
        dst
    }
}

/// Unfold `k×k` windows of one `(h, w, c)` image into rows of a
/// `(oh·ow) × (k·k·c)` matrix, columns ordered `(ky, kx, ci)`.
pub(crate) fn im2col(img: &[f64], h: usize, w: usize, c: usize, k: usize) -> Vec<f64> {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let row_len = k * k * c;
    let seg = k * c;
    let mut cols = vec![0.0; oh * ow * row_len];
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut cols[(oy * ow + ox) * row_len..][..row_len];
            for ky in 0..k {
                let src = ((oy + ky) * w + ox) * c;
                row[ky * seg..(ky + 1) * seg].copy_from_slice(&img[src..src + seg]);
            }
        }
    }
    cols
}

/// Adjoint of [`im2col`]: accumulate rows back onto an `(h, w, c)` image.
pub(crate) fn col2im_add(cols: &[f64], h: usize, w: usize, c: usize, k: usize, img: &mut [f64]) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let row_len = k * k * c;
    let seg = k * c;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &cols[(oy * ow + ox) * row_len..][..row_len];
            for ky in 0..k {
                let dst = ((oy + ky) * w + ox) * c;
                for (d, s) in img[dst..dst + seg]
                    .iter_mut()
                    .zip(&row[ky * seg..(ky + 1) * seg])
                {
                    *d += s;
                }
            }
        }
    }
}

fn add_bias(out: &mut [f64], bias: &[f64]) {
    for px in out.chunks_exact_mut(bias.len()) {
        for (v, b) in px.iter_mut().zip(bias) {
            *v += b;
        }
    }
}

fn channel_sums(g: &[f64], c: usize) -> Vec<f64> {
    let mut sums = vec![0.0; c];
    for px in g.chunks_exact(c) {
        for (s, v) in sums.iter_mut().zip(px) {
            *s += v;
        }
    }
    sums
}

pub(crate) fn conv2d_output_dims(x: Dims, p: &ConvParams) -> Result<Dims> {
    let k = p.k();
    if x.c != p.c_in() {
        return Err(Error::Shape(format!(
            "conv input has {} channels, kernel expects {}",
            x.c,
            p.c_in()
        )));
    }
    if x.h < k || x.w < k {
        return Err(Error::Shape(format!(
            "conv kernel {k}x{k} larger than input {}x{}",
            x.h, x.w
        )));
    }
    Dims::new(x.n, x.h - k + 1, x.w - k + 1, p.c_out())
}

pub(crate) fn tconv2d_output_dims(x: Dims, p: &ConvParams) -> Result<Dims> {
    if x.c != p.c_in() {
        return Err(Error::Shape(format!(
            "tconv input has {} channels, kernel expects {}",
            x.c,
            p.c_in()
        )));
    }
    let k = p.k();
    Dims::new(x.n, x.h + k - 1, x.w + k - 1, p.c_out())
}

/// Valid cross-correlation: `out[y,x,o] = b[o] + Σ x[y+ky, x+kx, i]·K[ky,kx,i,o]`.
pub fn conv2d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let od = conv2d_output_dims(x.dims(), p)?;
    let d = x.dims();
    let (k, ci, co) = (p.k(), p.c_in(), p.c_out());
    let mut out = Tensor::zeros(od)?;
    let kmat = MatRef::row_major(p.kernel.values(), k * k * ci, co);
    let out_item = od.item_len();
    for n in 0..d.n {
        let cols = im2col(x.item(n), d.h, d.w, ci, k);
        let dst = &mut out.values_mut()[n * out_item..(n + 1) * out_item];
        gemm(
            MatRef::row_major(&cols, od.h * od.w, k * k * ci),
            kmat,
            0.0,
            dst,
        );
        add_bias(dst, p.bias.values());
    }
    Ok(out)
}

pub fn conv2d_backward(x: &Tensor, p: &ConvParams, grad_out: &Tensor) -> Result<ConvGrads> {
    let od = conv2d_output_dims(x.dims(), p)?;
    if grad_out.dims() != od {
        return Err(Error::Shape(format!(
            "conv grad_out {} does not match output {od}",
            grad_out.dims()
        )));
    }
    let d = x.dims();
    let (k, ci, co) = (p.k(), p.c_in(), p.c_out());
    let rows = od.h * od.w;
    let width = k * k * ci;
    let mut grad_x = Tensor::zeros(d)?;
    let mut grad_kernel = Tensor::zeros(p.kernel.dims())?;
    let mut grad_bias = vec![0.0; co];
    let kmat = MatRef::row_major(p.kernel.values(), width, co);
    let in_item = d.item_len();
    let mut grad_cols = vec![0.0; rows * width];
    for n in 0..d.n {
        let g = grad_out.item(n);
        let gmat = MatRef::row_major(g, rows, co);
        let cols = im2col(x.item(n), d.h, d.w, ci, k);
        gemm(
            MatRef::row_major(&cols, rows, width).t(),
            gmat,
            1.0,
            grad_kernel.values_mut(),
        );
        gemm(gmat, kmat.t(), 0.0, &mut grad_cols);
        col2im_add(
            &grad_cols,
            d.h,
            d.w,
            ci,
            k,
            &mut grad_x.values_mut()[n * in_item..(n + 1) * in_item],
        );
        for (s, v) in grad_bias.iter_mut().zip(channel_sums(g, co)) {
            *s += v;
        }
    }
    Ok(ConvGrads {
        grad_x,
        grad_kernel,
        grad_bias: Tensor::from_vec(bias_dims(co)?, grad_bias)?,
    })
}

/// Unit-stride transposed convolution, the adjoint of [`conv2d_forward`]:
/// every input pixel `(i, j)` adds `x[i,j,ci]·K[ky,kx,ci,co]` to output
/// pixel `(i+ky, j+kx)`. Output side is `input + k - 1`.
pub fn tconv2d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    let od = tconv2d_output_dims(x.dims(), p)?;
    let d = x.dims();
    let (k, ci, co) = (p.k(), p.c_in(), p.c_out());
    let kp = p.input_major_kernel();
    let kp = MatRef::row_major(&kp, ci, k * k * co);
    let rows = d.h * d.w;
    let mut cols = vec![0.0; rows * k * k * co];
    let mut out = Tensor::zeros(od)?;
    let out_item = od.item_len();
    for n in 0..d.n {
        gemm(MatRef::row_major(x.item(n), rows, ci), kp, 0.0, &mut cols);
        let dst = &mut out.values_mut()[n * out_item..(n + 1) * out_item];
        col2im_add(&cols, od.h, od.w, co, k, dst);
        add_bias(dst, p.bias.values());
    }
    Ok(out)
}

pub fn tconv2d_backward(x: &Tensor, p: &ConvParams, grad_out: &Tensor) -> Result<ConvGrads> {
    let od = tconv2d_output_dims(x.dims(), p)?;
    if grad_out.dims() != od {
        return Err(Error::Shape(format!(
            "tconv grad_out {} does not match output {od}",
            grad_out.dims()
        )));
    }
    let d = x.dims();
    let (k, ci, co) = (p.k(), p.c_in(), p.c_out());
    let rows = d.h * d.w;
    let width = k * k * co;
    let kp = p.input_major_kernel();
    let kp = MatRef::row_major(&kp, ci, width);
    let mut grad_x = Tensor::zeros(d)?;
    let mut grad_kp = vec![0.0; ci * width];
    let mut grad_bias = vec![0.0; co];
    let in_item = d.item_len();
    for n in 0..d.n {
        let g = grad_out.item(n);
        let gcols = im2col(g, od.h, od.w, co, k);
        let gcols = MatRef::row_major(&gcols, rows, width);
        gemm(
            gcols,
            kp.t(),
            0.0,
            &mut grad_x.values_mut()[n * in_item..(n + 1) * in_item],
        );
        gemm(
            MatRef::row_major(x.item(n), rows, ci).t(),
            gcols,
            1.0,
            &mut grad_kp,
        );
        for (s, v) in grad_bias.iter_mut().zip(channel_sums(g, co)) {
            *s += v;
        }
    }
    let grad_kernel = Tensor::from_vec(
        p.kernel.dims(),
        ConvParams::from_input_major(&grad_kp, k, ci, co),
    )?;
    Ok(ConvGrads {
        grad_x,
        grad_kernel,
        grad_bias: Tensor::from_vec(bias_dims(co)?, grad_bias)?,
    })
}
