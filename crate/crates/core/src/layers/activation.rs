use crate::error::{Error, Result};
use crate::layers::conv::bias_dims;
use crate::numtensor::Tensor;

pub const PRELU_INIT_ALPHA: f64 = 0.25;

/// Learnable per-channel negative slope.
#[derive(Clone, Debug, PartialEq)]
pub struct PReluParams {
    pub alpha: Tensor,
}

impl PReluParams {
    pub fn new(channels: usize, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Parameter(format!("PReLU alpha {alpha}")));
        }
        Ok(PReluParams {
            alpha: Tensor::new(bias_dims(channels)?, alpha)?,
        })
    }

    pub fn channels(&self) -> usize {
        self.alpha.len()
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if x.dims().c != self.channels() {
            return Err(Error::Shape(format!(
                "PReLU has {} slopes for a {}-channel tensor",
                self.channels(),
                x.dims().c
            )));
        }
        Ok(())
    }
}

pub fn relu_forward(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    out.clear_grad();
    for v in out.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    out
}

/// Passes the gradient where `x >= 0`, matching PReLU with a zero slope.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    x.same_dims(grad_out, "relu_backward")?;
    let g = x
        .values()
        .iter()
        .zip(grad_out.values())
        .map(|(&x, &g)| if x < 0.0 { 0.0 } else { g })
        .collect();
    Tensor::from_vec(x.dims(), g)
}

/// `αx` for `x < 0`, `x` otherwise.
pub fn prelu_forward(x: &Tensor, a: &PReluParams) -> Result<Tensor> {
    a.check(x)?;
    let alpha = a.alpha.values();
    let mut out = x.clone();
    out.clear_grad();
    for px in out.values_mut().chunks_exact_mut(alpha.len()) {
        for (v, &al) in px.iter_mut().zip(alpha) {
            if *v < 0.0 {
                *v *= al;
            }
        }
    }
    Ok(out)
}

/// Returns `(grad_x, grad_alpha)`; `grad_alpha[c]` sums `grad_out·x` over
/// the negative inputs of channel `c`.
pub fn prelu_backward(x: &Tensor, a: &PReluParams, grad_out: &Tensor) -> Result<(Tensor, Tensor)> {
    a.check(x)?;
    x.same_dims(grad_out, "prelu_backward")?;
    let alpha = a.alpha.values();
    let c = alpha.len();
    let mut gx = vec![0.0; x.len()];
    let mut ga = vec![0.0; c];
    for ((xs, gs), gxs) in x
        .values()
        .chunks_exact(c)
        .zip(grad_out.values().chunks_exact(c))
        .zip(gx.chunks_exact_mut(c))
    {
        for ch in 0..c {
            if xs[ch] < 0.0 {
                gxs[ch] = alpha[ch] * gs[ch];
                ga[ch] += gs[ch] * xs[ch];
            } else {
                gxs[ch] = gs[ch];
            }
        }
    }
    Ok((
        Tensor::from_vec(x.dims(), gx)?,
        Tensor::from_vec(a.alpha.dims(), ga)?,
    ))
}

pub fn merge_add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.same_dims(b, "merge_add")?;
    let v = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| x + y)
        .collect();
    Tensor::from_vec(a.dims(), v)
}

/// Both summands receive `grad_out` unchanged.
pub fn merge_add_backward(grad_out: &Tensor) -> (Tensor, Tensor) {
    let mut g = grad_out.clone();
    g.clear_grad();
    (g.clone(), g)
}
