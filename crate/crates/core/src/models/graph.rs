use std::fmt;

use crate::error::{Error, Result};
use crate::layers::{
    conv2d_backward, conv2d_forward, conv2d_output_dims, merge_add, prelu_backward,
    prelu_forward, relu_backward, relu_forward, subpixel_backward, subpixel_forward,
    subpixel_output_dims, tconv2d_backward, tconv2d_forward, tconv2d_output_dims, ConvParams,
    PReluParams, SubpixelConfig, PRELU_INIT_ALPHA,
};
use crate::numtensor::{Dims, Rng, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arch {
    Ctc,
    Psc,
    Cts,
    Multi,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::Ctc, Arch::Psc, Arch::Cts, Arch::Multi];

    pub fn id(self) -> u8 {
        match self {
            Arch::Ctc => 0,
            Arch::Psc => 1,
            Arch::Cts => 2,
            Arch::Multi => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Arch> {
        Arch::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Arch::Ctc => "ctc",
            Arch::Psc => "psc",
            Arch::Cts => "cts",
            Arch::Multi => "multi",
        }
    }

    pub fn parse(s: &str) -> Option<Arch> {
        Arch::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Prelu,
}

impl Activation {
    pub const ALL: [Activation; 2] = [Activation::Relu, Activation::Prelu];

    pub fn id(self) -> u8 {
        match self {
            Activation::Relu => 0,
            Activation::Prelu => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Activation> {
        Activation::ALL.into_iter().find(|a| a.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Prelu => "prelu",
        }
    }

    pub fn parse(s: &str) -> Option<Activation> {
        Activation::ALL.into_iter().find(|a| a.name() == s)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upscale factors the architectures are defined for.
pub const SCALES: [usize; 2] = [2, 4];

pub(crate) fn check_scale(r: usize) -> Result<()> {
    if SCALES.contains(&r) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("upscale factor must be 2 or 4, got {r}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModelMeta {
    pub arch: Arch,
    pub r: usize,
    pub act: Activation,
}

impl fmt::Display for ModelMeta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-x{}-{}", self.arch, self.r, self.act)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayerKind {
    Input,
    Conv,
    TConv,
    Subpixel,
    Relu,
    Prelu,
    Add,
}

/// Declarative description of one node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub name: String,
    pub kind: LayerKind,
    /// Kernel side for `Conv`/`TConv`.
    pub k: usize,
    /// Output channels for `Conv`/`TConv`.
    pub c_out: usize,
    /// Shuffle factor for `Subpixel`.
    pub r: usize,
    pub inputs: Vec<usize>,
    /// Whether the node appears as a row of the feature-map tables.
    pub traced: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Input,
    Conv(ConvParams),
    TConv(ConvParams),
    Subpixel(SubpixelConfig),
    Relu,
    Prelu(PReluParams),
    Add,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub spec: LayerSpec,
    pub op: Op,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ParamKind {
    Kernel,
    Bias,
    Alpha,
}

impl ParamKind {
    pub fn id(self) -> u8 {
        match self {
            ParamKind::Kernel => 0,
            ParamKind::Bias => 1,
            ParamKind::Alpha => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<ParamKind> {
        [ParamKind::Kernel, ParamKind::Bias, ParamKind::Alpha]
            .into_iter()
            .find(|k| k.id() == id)
    }
}

/// Identifies one trainable tensor: owning node and role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId {
    pub node: usize,
    pub kind: ParamKind,
}

/// Topologically ordered layer graph with its parameters. Node 0 is the
/// single input and the last node is the single output.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGraph {
    meta: ModelMeta,
    nodes: Vec<Node>,
}

/// Input patch side used for training and tiling.
pub const INPUT_SIDE: usize = 16;

impl ModelGraph {
    /// Instantiate parameters for `specs`: Gaussian fan-in scaled kernels,
    /// zero biases and PReLU slopes of 0.25.
    pub fn from_specs(meta: ModelMeta, specs: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        validate_topology(&specs)?;
        let mut rng = Rng::new(seed);
        let mut channels: Vec<usize> = Vec::with_capacity(specs.len());
        let mut nodes = Vec::with_capacity(specs.len());
        for spec in specs {
            let in_c = spec.inputs.first().map(|&i| channels[i]).unwrap_or(1);
            let (op, out_c) = match spec.kind {
                LayerKind::Input => (Op::Input, 1),
                LayerKind::Conv => (
                    Op::Conv(ConvParams::he_normal(spec.k, in_c, spec.c_out, &mut rng)?),
                    spec.c_out,
                ),
                LayerKind::TConv => (
                    Op::TConv(ConvParams::he_normal(spec.k, in_c, spec.c_out, &mut rng)?),
                    spec.c_out,
                ),
                LayerKind::Subpixel => {
                    let r2 = spec.r * spec.r;
                    if r2 == 0 || in_c % r2 != 0 {
                        return Err(Error::Shape(format!(
                            "node {}: {in_c} channels cannot be shuffled by r = {}",
                            spec.name, spec.r
                        )));
                    }
                    (Op::Subpixel(SubpixelConfig::new(spec.r)?), in_c / r2)
                }
                LayerKind::Relu => (Op::Relu, in_c),
                LayerKind::Prelu => (Op::Prelu(PReluParams::new(in_c, PRELU_INIT_ALPHA)?), in_c),
                LayerKind::Add => {
                    let other = channels[spec.inputs[1]];
                    if other != in_c {
                        return Err(Error::Shape(format!(
                            "node {}: adding {in_c} and {other} channels",
                            spec.name
                        )));
                    }
                    (Op::Add, in_c)
                }
            };
            channels.push(out_c);
            nodes.push(Node { spec, op });
        }
        Ok(ModelGraph { meta, nodes })
    }

    pub fn meta(&self) -> ModelMeta {
        self.meta
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.spec.name == name)
    }

    /// Trainable tensors in storage order (node order; kernel before bias).
    pub fn params(&self) -> Vec<(ParamId, &Tensor)> {
        let mut out = Vec::new();
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.op {
                Op::Conv(p) | Op::TConv(p) => {
                    out.push((ParamId { node: i, kind: ParamKind::Kernel }, &p.kernel));
                    out.push((ParamId { node: i, kind: ParamKind::Bias }, &p.bias));
                }
                Op::Prelu(a) => out.push((ParamId { node: i, kind: ParamKind::Alpha }, &a.alpha)),
                _ => {}
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<(ParamId, &mut Tensor)> {
        let mut out = Vec::new();
        for (i, node) in self.nodes.iter_mut().enumerate() {
            match &mut node.op {
                Op::Conv(p) | Op::TConv(p) => {
                    out.push((ParamId { node: i, kind: ParamKind::Kernel }, &mut p.kernel));
                    out.push((ParamId { node: i, kind: ParamKind::Bias }, &mut p.bias));
                }
                Op::Prelu(a) => {
                    out.push((ParamId { node: i, kind: ParamKind::Alpha }, &mut a.alpha))
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|(_, t)| t.len()).sum()
    }

    /// Output dims of every node for an input of `input` dims.
    pub fn infer_shapes(&self, input: Dims) -> Result<Vec<Dims>> {
        let mut shapes: Vec<Dims> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let src = node.spec.inputs.first().map(|&i| shapes[i]).unwrap_or(input);
            let name = &node.spec.name;
            let ctx = |e: Error| Error::Shape(format!("node {name}: {e}"));
            let d = match &node.op {
                Op::Input => {
                    if input.c != 1 {
                        return Err(Error::Shape(format!(
                            "node {name}: model input must have 1 channel, got {input}"
                        )));
                    }
                    input
                }
                Op::Conv(p) => conv2d_output_dims(src, p).map_err(ctx)?,
                Op::TConv(p) => tconv2d_output_dims(src, p).map_err(ctx)?,
                Op::Subpixel(cfg) => subpixel_output_dims(src, *cfg).map_err(ctx)?,
                Op::Relu => src,
                Op::Prelu(a) => {
                    if a.channels() != src.c {
                        return Err(Error::Shape(format!(
                            "node {name}: {} slopes for {} channels",
                            a.channels(),
                            src.c
                        )));
                    }
                    src
                }
                Op::Add => {
                    let other = shapes[node.spec.inputs[1]];
                    if other != src {
                        return Err(Error::Shape(format!(
                            "node {name}: adding {src} and {other}"
                        )));
                    }
                    src
                }
            };
            shapes.push(d);
        }
        Ok(shapes)
    }

    /// `(name, (h, w, c))` of the traced nodes for a single input of side
    /// `side`.
    pub fn shape_trace(&self, side: usize) -> Result<Vec<(String, [usize; 3])>> {
        let shapes = self.infer_shapes(Dims::new(1, side, side, 1)?)?;
        Ok(self
            .nodes
            .iter()
            .zip(shapes)
            .filter(|(n, _)| n.spec.traced)
            .map(|(n, d)| (n.spec.name.clone(), [d.h, d.w, d.c]))
            .collect())
    }

    pub fn output_dims(&self, input: Dims) -> Result<Dims> {
        Ok(*self.infer_shapes(input)?.last().expect("graph is non-empty"))
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mut acts = self.forward_all(x)?;
        Ok(acts.pop().expect("graph is non-empty"))
    }

    /// Outputs of every node, in node order.
    pub fn forward_all(&self, x: &Tensor) -> Result<Vec<Tensor>> {
        self.infer_shapes(x.dims())?;
        let mut acts: Vec<Tensor> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let src = node.spec.inputs.first().map(|&i| &acts[i]).unwrap_or(x);
            let y = match &node.op {
                Op::Input => {
                    let mut t = x.clone();
                    t.clear_grad();
                    t
                }
                Op::Conv(p) => conv2d_forward(src, p)?,
                Op::TConv(p) => tconv2d_forward(src, p)?,
                Op::Subpixel(cfg) => subpixel_forward(src, *cfg)?,
                Op::Relu => relu_forward(src),
                Op::Prelu(a) => prelu_forward(src, a)?,
                Op::Add => merge_add(src, &acts[node.spec.inputs[1]])?,
            };
            acts.push(y);
        }
        Ok(acts)
    }

    /// Reverse pass from `grad_out` (gradient of the loss with respect to the
    /// output). Gradients reaching a node from several consumers are summed.
    /// Returns parameter gradients aligned with [`ModelGraph::params`] and
    /// the gradient with respect to the input.
    pub fn backward(&self, acts: &[Tensor], grad_out: &Tensor) -> Result<(Vec<Tensor>, Tensor)> {
        if acts.len() != self.nodes.len() {
            return Err(Error::Shape(format!(
                "{} activations for {} nodes",
                acts.len(),
                self.nodes.len()
            )));
        }
        let last = self.nodes.len() - 1;
        grad_out.same_dims(&acts[last], "backward grad_out")?;
        let mut node_grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        node_grads[last] = Some(grad_out.clone());
        let mut param_grads: Vec<Option<Tensor>> = Vec::new();
        let mut slots: Vec<(usize, ParamKind)> = Vec::new();
        for (id, _) in self.params() {
            slots.push((id.node, id.kind));
            param_grads.push(None);
        }
        let slot = |node: usize, kind: ParamKind| {
            slots
                .iter()
                .position(|&(n, k)| n == node && k == kind)
                .expect("parameter slot exists")
        };

        fn accumulate(dst: &mut Option<Tensor>, g: Tensor) -> Result<()> {
            match dst {
                Some(t) => {
                    t.same_dims(&g, "gradient accumulation")?;
                    for (a, b) in t.values_mut().iter_mut().zip(g.values()) {
                        *a += b;
                    }
                }
                None => *dst = Some(g),
            }
            Ok(())
        }

        for i in (1..self.nodes.len()).rev() {
            let g = match node_grads[i].take() {
                Some(g) => g,
                None => continue,
            };
            let node = &self.nodes[i];
            let src_id = node.spec.inputs[0];
            let src = &acts[src_id];
            match &node.op {
                Op::Input => {}
                Op::Conv(p) | Op::TConv(p) => {
                    let grads = if matches!(node.op, Op::Conv(_)) {
                        conv2d_backward(src, p, &g)?
                    } else {
                        tconv2d_backward(src, p, &g)?
                    };
                    param_grads[slot(i, ParamKind::Kernel)] = Some(grads.grad_kernel);
                    param_grads[slot(i, ParamKind::Bias)] = Some(grads.grad_bias);
                    accumulate(&mut node_grads[src_id], grads.grad_x)?;
                }
                Op::Subpixel(cfg) => {
                    accumulate(&mut node_grads[src_id], subpixel_backward(&g, *cfg)?)?;
                }
                Op::Relu => accumulate(&mut node_grads[src_id], relu_backward(src, &g)?)?,
                Op::Prelu(a) => {
                    let (gx, ga) = prelu_backward(src, a, &g)?;
                    param_grads[slot(i, ParamKind::Alpha)] = Some(ga);
                    accumulate(&mut node_grads[src_id], gx)?;
                }
                Op::Add => {
                    let other = node.spec.inputs[1];
                    accumulate(&mut node_grads[other], g.clone())?;
                    accumulate(&mut node_grads[src_id], g)?;
                }
            }
        }
        let grad_input = match node_grads[0].take() {
            Some(g) => g,
            None => Tensor::zeros(acts[0].dims())?,
        };
        let params = self.params();
        let param_grads = param_grads
            .into_iter()
            .zip(params)
            .map(|(g, (_, p))| match g {
                Some(g) => Ok(g),
                None => Tensor::zeros(p.dims()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((param_grads, grad_input))
    }
}

fn validate_topology(specs: &[LayerSpec]) -> Result<()> {
    let first = specs
        .first()
        .ok_or_else(|| Error::Shape("empty layer graph".into()))?;
    if first.kind != LayerKind::Input || !first.inputs.is_empty() {
        return Err(Error::Shape("node 0 must be the input".into()));
    }
    let mut consumed = vec![false; specs.len()];
    for (i, s) in specs.iter().enumerate().skip(1) {
        let arity = match s.kind {
            LayerKind::Input => {
                return Err(Error::Shape(format!("node {}: second input node", s.name)))
            }
            LayerKind::Add => 2,
            _ => 1,
        };
        if s.inputs.len() != arity {
            return Err(Error::Shape(format!(
                "node {}: expected {arity} inputs, got {}",
                s.name,
                s.inputs.len()
            )));
        }
        for &src in &s.inputs {
            if src >= i {
                return Err(Error::Shape(format!(
                    "node {}: input {src} is not an earlier node",
                    s.name
                )));
            }
            consumed[src] = true;
        }
    }
    let last = specs.len() - 1;
    if let Some(dangling) = (0..last).find(|&i| !consumed[i]) {
        return Err(Error::Shape(format!(
            "node {} is not consumed; graph must have a single output",
            specs[dangling].name
        )));
    }
    Ok(())
}
