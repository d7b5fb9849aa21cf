//! The CTC, PSC and CTS super-resolution graphs and their three-stream
//! combination, with graph execution and the `BDSR` checkpoint format.

mod arch;
mod checkpoint;
mod graph;
pub mod tables;

pub use arch::{
    build_ctc, build_cts, build_model, build_multistream, build_psc, layer_specs,
    single_stream_variants,
};
pub use checkpoint::{
    decode_model, decode_model_file, encode_model, load_model, save_model, MAGIC, TRAILER_MAGIC,
    VERSION,
};
pub use graph::{
    Activation, Arch, LayerKind, LayerSpec, ModelGraph, ModelMeta, Node, Op, ParamId, ParamKind,
    INPUT_SIDE, SCALES,
};
pub(crate) use graph::check_scale;
