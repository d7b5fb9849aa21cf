//! Mini-batch MSE training with Adam, deterministic per-epoch shuffling,
//! checkpoint/resume and a tab-separated loss log.

mod state;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::datasynth::{BinaryImage, PatchPairSet};
use crate::error::{Error, Result};
use crate::models::{ModelGraph, INPUT_SIDE};
use crate::numtensor::{adam_step, derive_seed, AdamHyper, Dims, Rng, Tensor};

pub use state::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, TrainState};

/// Loss above which training is aborted.
pub const DIVERGENCE_LIMIT: f64 = 1e3;
pub const DEFAULT_BATCH_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: u64,
    /// Optional cap on the total number of steps.
    pub max_steps: Option<u64>,
    pub hyper: AdamHyper,
    pub seed: u64,
    /// Write a checkpoint every this many steps (0 = only at the end).
    pub checkpoint_every: u64,
    pub checkpoint_path: Option<PathBuf>,
    pub log_path: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: DEFAULT_BATCH_SIZE,
            epochs: 1,
            max_steps: None,
            hyper: AdamHyper::default(),
            seed: 1,
            checkpoint_every: 0,
            checkpoint_path: None,
            log_path: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        self.hyper
            .validate()
            .map_err(|e| Error::Config(format!("optimizer: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossRecord {
    pub step: u64,
    pub epoch: u64,
    pub loss: f64,
}

impl LossRecord {
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\n", self.step, self.epoch, self.loss)
    }
}

/// Ink = 1, background = 0, as `f64`.
pub fn unit_values(img: &BinaryImage) -> Vec<f64> {
    img.bits().iter().map(|&b| b as f64).collect()
}

/// Stack images of equal size into an `(n, h, w, 1)` tensor.
pub fn images_to_tensor(imgs: &[&BinaryImage]) -> Result<Tensor> {
    let first = imgs
        .first()
        .ok_or_else(|| Error::Input("no images to convert".into()))?;
    let (h, w) = (first.h(), first.w());
    let mut values = Vec::with_capacity(imgs.len() * h * w);
    for img in imgs {
        if (img.h(), img.w()) != (h, w) {
            return Err(Error::Dimension(format!(
                "image {}×{} among {h}×{w} images",
                img.h(),
                img.w()
            )));
        }
        values.extend(unit_values(img));
    }
    Tensor::from_vec(Dims::new(imgs.len(), h, w, 1)?, values)
}

/// Mean squared error normalized by `H·W·N` and its gradient.
pub fn mse_loss(pred: &Tensor, gt: &Tensor) -> Result<(f64, Tensor)> {
    pred.same_dims(gt, "mse_loss")?;
    let d = pred.dims();
    let norm = (d.h * d.w * d.n) as f64;
    let mut grad = Tensor::zeros(d)?;
    let mut sum = 0.0;
    for ((g, p), t) in grad.values_mut().iter_mut().zip(pred.values()).zip(gt.values()) {
        let e = p - t;
        sum += e * e;
        *g = 2.0 * e / norm;
    }
    Ok((sum / norm, grad))
}

/// Patch pairs as flat unit-valued arrays.
struct TrainingData {
    lr: Vec<Vec<f64>>,
    hr: Vec<Vec<f64>>,
    lr_dims: Dims,
    hr_dims: Dims,
}

impl TrainingData {
    fn new(graph: &ModelGraph, set: &PatchPairSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::Input("empty patch set".into()));
        }
        let r = graph.meta().r;
        if set.r() != r {
            return Err(Error::Config(format!(
                "archive is ×{} but the model is ×{r}",
                set.r()
            )));
        }
        if set.lr_side() != INPUT_SIDE {
            return Err(Error::Config(format!(
                "archive LR side {} differs from model input {INPUT_SIDE}",
                set.lr_side()
            )));
        }
        let lr_dims = Dims::new(1, INPUT_SIDE, INPUT_SIDE, 1)?;
        let hr_dims = graph.output_dims(lr_dims)?;
        if (hr_dims.h, hr_dims.w) != (set.hr_side(), set.hr_side()) {
            return Err(Error::Config(format!(
                "model output {hr_dims} does not match HR patch side {}",
                set.hr_side()
            )));
        }
        Ok(TrainingData {
            lr: set.pairs().iter().map(|p| unit_values(&p.lr)).collect(),
            hr: set.pairs().iter().map(|p| unit_values(&p.hr)).collect(),
            lr_dims,
            hr_dims,
        })
    }

    fn len(&self) -> usize {
        self.lr.len()
    }
}

/// Per-item squared-error sum and, if requested, parameter gradients of the
/// batch loss `Σ/(H·W·N)`.
fn item_pass(
    graph: &ModelGraph,
    data: &TrainingData,
    i: usize,
    norm: f64,
    with_grads: bool,
) -> Result<(f64, Option<Vec<Tensor>>)> {
    let x = Tensor::from_vec(data.lr_dims, data.lr[i].clone())?;
    let acts = graph.forward_all(&x)?;
    let pred = acts.last().expect("graph is non-empty");
    let mut grad = Tensor::zeros(data.hr_dims)?;
    let mut sum = 0.0;
    for ((g, p), t) in grad.values_mut().iter_mut().zip(pred.values()).zip(&data.hr[i]) {
        let e = p - t;
        sum += e * e;
        *g = 2.0 * e / norm;
    }
    if !with_grads {
        return Ok((sum, None));
    }
    let (pg, _) = graph.backward(&acts, &grad)?;
    Ok((sum, Some(pg)))
}

/// Squared errors and summed gradients over `batch`, reduced in index order.
fn batch_pass(
    graph: &ModelGraph,
    data: &TrainingData,
    batch: &[usize],
) -> Result<(f64, Vec<Tensor>)> {
    let d = data.hr_dims;
    let norm = (d.h * d.w * batch.len()) as f64;
    let items: Vec<(f64, Option<Vec<Tensor>>)> = batch
        .par_iter()
        .map(|&i| item_pass(graph, data, i, norm, true))
        .collect::<Result<_>>()?;
    let mut iter = items.into_iter();
    let (mut sq, first) = iter.next().expect("batch is non-empty");
    let mut grads = first.expect("gradients requested");
    for (s, g) in iter {
        sq += s;
        for (acc, gi) in grads.iter_mut().zip(g.expect("gradients requested")) {
            for (a, b) in acc.values_mut().iter_mut().zip(gi.values()) {
                *a += b;
            }
        }
    }
    Ok((sq / norm, grads))
}

/// Mean of the per-pixel squared error over the whole set (forward only).
pub fn evaluate_loss(graph: &ModelGraph, set: &PatchPairSet) -> Result<f64> {
    let data = TrainingData::new(graph, set)?;
    let d = data.hr_dims;
    let norm = (d.h * d.w * data.len()) as f64;
    let sums: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| item_pass(graph, &data, i, norm, false).map(|(s, _)| s))
        .collect::<Result<_>>()?;
    Ok(sums.iter().sum::<f64>() / norm)
}

fn batches_per_epoch(n: usize, batch: usize) -> u64 {
    n.div_ceil(batch) as u64
}

/// Sample order for `epoch` (0-based), a pure function of seed and epoch.
fn epoch_order(seed: u64, epoch: u64, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    Rng::new(derive_seed(seed, epoch)).shuffle(&mut order);
    order
}

fn append_log(path: &Path, rec: &LossRecord) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    f.write_all(rec.to_line().as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Total steps the configuration asks for on a set of `n` pairs.
pub fn planned_steps(cfg: &TrainConfig, n: usize) -> u64 {
    let total = cfg.epochs.saturating_mul(batches_per_epoch(n, cfg.batch_size));
    cfg.max_steps.map_or(total, |m| m.min(total))
}

/// Advance `state` until it reaches `until` steps (bounded by the plan),
/// logging and checkpointing per `cfg`.
pub fn train_until(
    state: &mut TrainState,
    set: &PatchPairSet,
    cfg: &TrainConfig,
    until: u64,
) -> Result<Vec<LossRecord>> {
    cfg.validate()?;
    if state.seed != cfg.seed || state.batch_size != cfg.batch_size {
        return Err(Error::Config(format!(
            "state was created with seed {} and batch size {}, config has {} and {}",
            state.seed, state.batch_size, cfg.seed, cfg.batch_size
        )));
    }
    if state.hyper() != cfg.hyper {
        return Err(Error::Config(format!(
            "state optimizer settings {:?} differ from config {:?}",
            state.hyper(),
            cfg.hyper
        )));
    }
    let data = TrainingData::new(&state.graph, set)?;
    let n = data.len();
    let bpe = batches_per_epoch(n, cfg.batch_size);
    let end = until.min(planned_steps(cfg, n));
    let mut records = Vec::new();
    let mut order_epoch = u64::MAX;
    let mut order = Vec::new();
    while state.step < end {
        let epoch = state.step / bpe;
        let pos = (state.step % bpe) as usize;
        if epoch != order_epoch {
            order = epoch_order(cfg.seed, epoch, n);
            order_epoch = epoch;
        }
        let lo = pos * cfg.batch_size;
        let batch = &order[lo..(lo + cfg.batch_size).min(n)];
        let (loss, grads) = batch_pass(&state.graph, &data, batch)?;
        let step = state.step + 1;
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(Error::Divergence { step, loss });
        }
        for (((_, p), g), st) in state
            .graph
            .params_mut()
            .into_iter()
            .zip(&grads)
            .zip(state.adam.iter_mut())
        {
            adam_step(p, g, st)?;
        }
        state.step = step;
        let rec = LossRecord {
            step,
            epoch: epoch + 1,
            loss,
        };
        if let Some(path) = &cfg.log_path {
            append_log(path, &rec)?;
        }
        records.push(rec);
        if cfg.checkpoint_every > 0 && step % cfg.checkpoint_every == 0 {
            if let Some(path) = &cfg.checkpoint_path {
                save_checkpoint(state, path)?;
            }
        }
    }
    if let Some(path) = &cfg.checkpoint_path {
        save_checkpoint(state, path)?;
    }
    Ok(records)
}

/// Train `graph` from scratch for the planned number of steps.
pub fn train(
    graph: ModelGraph,
    set: &PatchPairSet,
    cfg: &TrainConfig,
) -> Result<(TrainState, Vec<LossRecord>)> {
    let mut state = TrainState::new(graph, cfg)?;
    let records = train_until(&mut state, set, cfg, u64::MAX)?;
    Ok((state, records))
}

/// Continue from a checkpoint written by [`train`].
pub fn resume(
    checkpoint: &Path,
    set: &PatchPairSet,
    cfg: &TrainConfig,
) -> Result<(TrainState, Vec<LossRecord>)> {
    let mut state = load_checkpoint(checkpoint)?;
    let records = train_until(&mut state, set, cfg, u64::MAX)?;
    Ok((state, records))
}
