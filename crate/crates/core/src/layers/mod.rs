//! Forward and reverse-mode passes for every layer the architectures use.

mod activation;
mod conv;
pub(crate) mod gemm;
pub mod naive;
mod subpixel;

pub use activation::{
    merge_add, merge_add_backward, prelu_backward, prelu_forward, relu_backward, relu_forward,
    PReluParams, PRELU_INIT_ALPHA,
};
pub use conv::{
    conv2d_backward, conv2d_forward, tconv2d_backward, tconv2d_forward, ConvGrads, ConvParams,
};
pub(crate) use conv::{conv2d_output_dims, tconv2d_output_dims};
pub use subpixel::{subpixel_backward, subpixel_forward, SubpixelConfig};
pub(crate) use subpixel::subpixel_output_dims;
