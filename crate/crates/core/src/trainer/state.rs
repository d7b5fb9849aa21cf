//! Training state and its checkpoint: a `BDSR` model followed by an `ADAM`
//! block (u16 version, u64 step, u64 seed, u32 batch size, f64 lr, beta1,
//! beta2, eps, u32 tensor count, then per tensor u32 length and the first
//! and second moments as f64).

use std::path::Path;

use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::models::{decode_model_file, encode_model, ModelGraph, TRAILER_MAGIC};
use crate::numtensor::{AdamHyper, AdamState};
use crate::trainer::TrainConfig;

const ADAM_VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainState {
    pub graph: ModelGraph,
    /// One optimizer state per parameter tensor, in parameter order.
    pub adam: Vec<AdamState>,
    /// Completed steps.
    pub step: u64,
    pub seed: u64,
    pub batch_size: usize,
}

impl TrainState {
    pub fn new(graph: ModelGraph, cfg: &TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let adam = graph
            .params()
            .iter()
            .map(|(_, t)| AdamState::new(t.len(), cfg.hyper))
            .collect::<Result<_>>()?;
        Ok(TrainState {
            graph,
            adam,
            step: 0,
            seed: cfg.seed,
            batch_size: cfg.batch_size,
        })
    }

    pub fn hyper(&self) -> AdamHyper {
        self.adam.first().map(|a| a.hyper).unwrap_or_default()
    }
}

pub fn encode_checkpoint(state: &TrainState) -> Vec<u8> {
    let mut w = ByteWriter {
        buf: encode_model(&state.graph),
    };
    let h = state.hyper();
    w.bytes(TRAILER_MAGIC);
    w.u16(ADAM_VERSION);
    w.u64(state.step);
    w.u64(state.seed);
    w.u32(state.batch_size as u32);
    for v in [h.lr, h.beta1, h.beta2, h.eps] {
        w.f64(v);
    }
    w.u32(state.adam.len() as u32);
    for a in &state.adam {
        w.u32(a.m.len() as u32);
        w.f64s(&a.m);
        w.f64s(&a.v);
    }
    w.buf
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<TrainState> {
    let (graph, rest) = decode_model_file(bytes)?;
    let mut r = ByteReader::new(rest, "ADAM block");
    r.expect_magic(TRAILER_MAGIC)?;
    let version = r.u16()?;
    if version != ADAM_VERSION {
        return Err(r.format_err(format!("unsupported version {version}")));
    }
    let step = r.u64()?;
    let seed = r.u64()?;
    let batch_size = r.u32()? as usize;
    let hyper = AdamHyper {
        lr: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        eps: r.f64()?,
    };
    hyper.validate().map_err(|e| r.format_err(e))?;
    let count = r.u32()? as usize;
    let params = graph.params();
    if count != params.len() {
        return Err(r.format_err(format!(
            "{count} moment tensors for {} parameters",
            params.len()
        )));
    }
    let mut adam = Vec::with_capacity(count);
    for (_, p) in &params {
        let len = r.u32()? as usize;
        if len != p.len() {
            return Err(r.format_err(format!("moment length {len} for a {} parameter", p.dims())));
        }
        adam.push(AdamState {
            m: r.f64s(len)?,
            v: r.f64s(len)?,
            t: step,
            hyper,
        });
    }
    if r.remaining() != 0 {
        return Err(r.format_err(format!("{} trailing bytes", r.remaining())));
    }
    drop(params);
    Ok(TrainState {
        graph,
        adam,
        step,
        seed,
        batch_size,
    })
}

/// Write via a temporary file and rename, so readers never see a partial
/// checkpoint.
pub fn save_checkpoint(state: &TrainState, path: &Path) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    std::fs::write(&tmp, encode_checkpoint(state)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainState> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
