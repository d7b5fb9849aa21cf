//! Dense tensors, seeded randomness and the Adam update rule.

mod adam;
mod rng;
mod tensor;

pub use adam::{
    adam_step, AdamHyper, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_LR,
};
pub use rng::{derive_seed, gaussian_pdf, Rng};
pub use tensor::{Dims, Tensor};
