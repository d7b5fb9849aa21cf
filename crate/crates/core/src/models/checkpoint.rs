//! `BDSR` checkpoint encoding.
//!
//! Layout (little-endian, no padding): magic `BDSR`, u16 version, u8 arch
//! id, u8 r, u8 activation id, u32 record count, then one record per
//! parameter tensor: u32 node id, u8 kind (0 kernel, 1 bias, 2 PReLU slope),
//! four u32 dims `(n, h, w, c)` and the raw f64 values. A trainer may append
//! an optimizer block after the last record; it must start with `ADAM`.

use std::collections::BTreeMap;
use std::path::Path;

use crate::binio::{ByteReader, ByteWriter};
use crate::error::{Error, Result};
use crate::models::arch::build_model;
use crate::models::graph::{Activation, Arch, ModelGraph, ModelMeta, ParamId, ParamKind};
use crate::numtensor::{Dims, Tensor};

pub const MAGIC: &[u8; 4] = b"BDSR";
pub const VERSION: u16 = 1;
/// Magic of the optional optimizer block that may follow the records.
pub const TRAILER_MAGIC: &[u8; 4] = b"ADAM";

pub fn encode_model(g: &ModelGraph) -> Vec<u8> {
    let meta = g.meta();
    let params = g.params();
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u8(meta.arch.id());
    w.u8(meta.r as u8);
    w.u8(meta.act.id());
    w.u32(params.len() as u32);
    for (id, t) in params {
        write_record(&mut w, id, t);
    }
    w.buf
}

fn write_record(w: &mut ByteWriter, id: ParamId, t: &Tensor) {
    let d = t.dims();
    w.u32(id.node as u32);
    w.u8(id.kind.id());
    for v in [d.n, d.h, d.w, d.c] {
        w.u32(v as u32);
    }
    w.f64s(t.values());
}

/// Decode a model; returns it with the number of bytes consumed.
pub fn decode_model(bytes: &[u8]) -> Result<(ModelGraph, usize)> {
    let mut r = ByteReader::new(bytes, "BDSR checkpoint");
    r.expect_magic(MAGIC)?;
    let version = r.u16()?;
    if version != VERSION {
        return Err(r.format_err(format!("unsupported version {version}")));
    }
    let arch_id = r.u8()?;
    let arch = Arch::from_id(arch_id).ok_or_else(|| r.format_err(format!("unknown arch id {arch_id}")))?;
    let scale = r.u8()? as usize;
    let act_id = r.u8()?;
    let act = Activation::from_id(act_id)
        .ok_or_else(|| r.format_err(format!("unknown activation id {act_id}")))?;
    let meta = ModelMeta { arch, r: scale, act };
    let mut g = build_model(meta, 0).map_err(|e| r.format_err(format!("header: {e}")))?;
    let count = r.u32()? as usize;

    let mut records: BTreeMap<ParamId, Tensor> = BTreeMap::new();
    for _ in 0..count {
        let node = r.u32()? as usize;
        let kind_id = r.u8()?;
        let kind = ParamKind::from_id(kind_id)
            .ok_or_else(|| r.format_err(format!("unknown parameter kind {kind_id}")))?;
        let mut d = [0usize; 4];
        for v in &mut d {
            *v = r.u32()? as usize;
        }
        let dims = Dims::new(d[0], d[1], d[2], d[3]).map_err(|e| r.format_err(e))?;
        let values = r.f64s(dims.len())?;
        let id = ParamId { node, kind };
        if records.insert(id, Tensor::from_vec(dims, values)?).is_some() {
            return Err(r.format_err(format!("duplicate record for node {node} kind {kind_id}")));
        }
    }

    let expected = g.params().len();
    if records.len() != expected {
        return Err(r.format_err(format!("{} records, model {meta} has {expected}", records.len())));
    }
    for (id, slot) in g.params_mut() {
        let t = records
            .remove(&id)
            .ok_or_else(|| Error::Format(format!("BDSR checkpoint: missing record for node {}", id.node)))?;
        if t.dims() != slot.dims() {
            return Err(Error::Format(format!(
                "BDSR checkpoint: node {} has dims {}, expected {}",
                id.node,
                t.dims(),
                slot.dims()
            )));
        }
        *slot = t;
    }
    Ok((g, r.pos()))
}

/// Decode a whole checkpoint file's bytes, allowing only an optimizer block
/// after the records.
pub fn decode_model_file(bytes: &[u8]) -> Result<(ModelGraph, &[u8])> {
    let (g, used) = decode_model(bytes)?;
    let rest = &bytes[used..];
    if !rest.is_empty() && !rest.starts_with(TRAILER_MAGIC) {
        return Err(Error::Format(format!(
            "BDSR checkpoint: {} unexpected trailing bytes",
            rest.len()
        )));
    }
    Ok((g, rest))
}

pub fn save_model(g: &ModelGraph, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(g)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ModelGraph> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_model_file(&bytes)?.0)
}

#[cfg(test)]
pub(crate) fn encode_with_record_order(g: &ModelGraph, order: &[usize]) -> Vec<u8> {
    let meta = g.meta();
    let params = g.params();
    let mut w = ByteWriter::default();
    w.bytes(MAGIC);
    w.u16(VERSION);
    w.u8(meta.arch.id());
    w.u8(meta.r as u8);
    w.u8(meta.act.id());
    w.u32(params.len() as u32);
    for &i in order {
        write_record(&mut w, params[i].0, params[i].1);
    }
    w.buf
}
