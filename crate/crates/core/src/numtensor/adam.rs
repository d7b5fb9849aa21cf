use crate::error::{Error, Result};
use crate::numtensor::Tensor;

pub const DEFAULT_LR: f64 = 0.001;
pub const DEFAULT_BETA1: f64 = 0.9;
pub const DEFAULT_BETA2: f64 = 0.999;
pub const DEFAULT_EPS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            lr: DEFAULT_LR,
            beta1: DEFAULT_BETA1,
            beta2: DEFAULT_BETA2,
            eps: DEFAULT_EPS,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        let beta_ok = |b: f64| (0.0..1.0).contains(&b);
        if !(self.lr >= 0.0) || !self.lr.is_finite() {
            return Err(Error::Parameter(format!("learning rate {}", self.lr)));
        }
        if !beta_ok(self.beta1) || !beta_ok(self.beta2) {
            return Err(Error::Parameter(format!(
                "betas must lie in [0, 1): {} {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("eps {}", self.eps)));
        }
        Ok(())
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(len: usize, hyper: AdamHyper) -> Result<Self> {
        hyper.validate()?;
        Ok(AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            hyper,
        })
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut Tensor, grads: &Tensor, state: &mut AdamState) -> Result<()> {
    params.same_dims(grads, "adam_step params/grads")?;
    if state.m.len() != params.len() || state.v.len() != params.len() {
        return Err(Error::Shape(format!(
            "adam moments of length {}/{} for parameter {}",
            state.m.len(),
            state.v.len(),
            params.dims()
        )));
    }
    adam_update(params.values_mut(), grads.values(), state);
    Ok(())
}

pub(crate) fn adam_update(params: &mut [f64], grads: &[f64], state: &mut AdamState) {
    let AdamHyper {
        lr,
        beta1,
        beta2,
        eps,
    } = state.hyper;
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}
