//! Super-resolution of low-resolution binary document images.
//!
//! Three small CNN families (convolution + transposed convolution, a
//! two-stream residual variant, and a sub-pixel variant) upscale 16×16
//! binary patches by 2 or 4. The crate covers the whole path: synthetic
//! training corpora, training with MSE and Adam, tiled page inference,
//! power-law post-processing, binarization and scoring.

mod binio;
pub mod datasynth;
pub mod error;
pub mod gradcheck;
pub mod layers;
pub mod models;
pub mod numtensor;
pub mod srpipeline;
pub mod trainer;
pub mod verify;

pub use error::{Error, Result};
