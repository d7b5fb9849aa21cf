use crate::error::Result;
use crate::models::graph::{
    check_scale, Activation, Arch, LayerKind, LayerSpec, ModelGraph, ModelMeta,
};

/// Incremental construction of a [`LayerSpec`] list with name prefixes.
struct Builder {
    specs: Vec<LayerSpec>,
    act: Activation,
    prefix: String,
}

impl Builder {
    fn new(act: Activation) -> Self {
        let mut b = Builder {
            specs: Vec::new(),
            act,
            prefix: String::new(),
        };
        b.push("input", LayerKind::Input, 0, 0, 0, vec![], true);
        b
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        name: &str,
        kind: LayerKind,
        k: usize,
        c_out: usize,
        r: usize,
        inputs: Vec<usize>,
        traced: bool,
    ) -> usize {
        self.specs.push(LayerSpec {
            name: format!("{}{name}", self.prefix),
            kind,
            k,
            c_out,
            r,
            inputs,
            traced,
        });
        self.specs.len() - 1
    }

    fn conv(&mut self, name: &str, from: usize, k: usize, c_out: usize) -> usize {
        self.push(name, LayerKind::Conv, k, c_out, 0, vec![from], true)
    }

    fn tconv(&mut self, name: &str, from: usize, k: usize, c_out: usize) -> usize {
        self.push(name, LayerKind::TConv, k, c_out, 0, vec![from], true)
    }

    fn act(&mut self, from: usize) -> usize {
        let kind = match self.act {
            Activation::Relu => LayerKind::Relu,
            Activation::Prelu => LayerKind::Prelu,
        };
        let name = format!("{}_{}", self.specs[from].name, self.act.name());
        let name = name.strip_prefix(&self.prefix).unwrap_or(&name).to_string();
        self.push(&name, kind, 0, 0, 0, vec![from], false)
    }

    fn subpixel(&mut self, name: &str, from: usize, r: usize) -> usize {
        self.push(name, LayerKind::Subpixel, 0, 0, r, vec![from], true)
    }

    fn add(&mut self, name: &str, a: usize, b: usize, traced: bool) -> usize {
        self.push(name, LayerKind::Add, 0, 0, 0, vec![a, b], traced)
    }

    /// conv1 (5×5, 48) and conv2 (5×5, 16), both activated.
    fn feature_extractor(&mut self, input: usize) -> usize {
        let c1 = self.conv("conv1", input, 5, 48);
        let a1 = self.act(c1);
        let c2 = self.conv("conv2", a1, 5, 16);
        self.act(c2)
    }

    fn ctc(&mut self, input: usize, r: usize) -> usize {
        let f = self.feature_extractor(input);
        let t1 = self.tconv("trconv1", f, 9, 16);
        let a1 = self.act(t1);
        if r == 2 {
            self.tconv("trconv2", a1, 17, 1)
        } else {
            let t2 = self.tconv("trconv2", a1, 17, 8);
            let a2 = self.act(t2);
            self.tconv("trconv3", a2, 33, 1)
        }
    }

    fn psc(&mut self, input: usize, r: usize) -> usize {
        let f = self.feature_extractor(input);
        let t1 = self.tconv("trconv1", f, 9, 16);
        let a1 = self.act(t1);
        if r == 2 {
            let main = self.tconv("trconv2", a1, 17, 1);
            let c3 = self.conv("conv3", a1, 1, 1);
            let res = self.add("residual", c3, input, false);
            let side = self.tconv("trconv3", res, 17, 1);
            self.add("output", main, side, true)
        } else {
            let t2 = self.tconv("trconv2", a1, 17, 8);
            let a2 = self.act(t2);
            let main = self.tconv("trconv4", a2, 33, 1);
            let c3 = self.conv("conv3", a1, 1, 1);
            let res = self.add("residual", c3, input, false);
            let t3 = self.tconv("trconv3", res, 17, 1);
            let a3 = self.act(t3);
            let side = self.tconv("trconv5", a3, 33, 1);
            self.add("output", main, side, true)
        }
    }

    fn cts(&mut self, input: usize, r: usize) -> usize {
        let f = self.feature_extractor(input);
        if r == 2 {
            let t1 = self.tconv("trconv1", f, 9, 4);
            self.subpixel("subpixel", t1, 2)
        } else {
            let t1 = self.tconv("trconv1", f, 9, 48);
            let a1 = self.act(t1);
            let c3 = self.conv("conv3", a1, 1, 16);
            self.subpixel("subpixel", c3, 4)
        }
    }

    fn stream(&mut self, arch: Arch, input: usize, r: usize) -> usize {
        match arch {
            Arch::Ctc => self.ctc(input, r),
            Arch::Psc => self.psc(input, r),
            Arch::Cts => self.cts(input, r),
            Arch::Multi => {
                self.prefix = "ctc/".into();
                let a = self.ctc(input, r);
                self.prefix = "psc/".into();
                let b = self.psc(input, r);
                self.prefix = "cts/".into();
                let c = self.cts(input, r);
                self.prefix.clear();
                let ab = self.add("merge", a, b, false);
                self.add("output", ab, c, true)
            }
        }
    }
}

/// Declarative layer list for an architecture.
pub fn layer_specs(meta: ModelMeta) -> Result<Vec<LayerSpec>> {
    check_scale(meta.r)?;
    let mut b = Builder::new(meta.act);
    b.stream(meta.arch, 0, meta.r);
    Ok(b.specs)
}

/// Build and initialize a model from `seed`.
pub fn build_model(meta: ModelMeta, seed: u64) -> Result<ModelGraph> {
    ModelGraph::from_specs(meta, layer_specs(meta)?, seed)
}

pub fn build_ctc(r: usize, act: Activation, seed: u64) -> Result<ModelGraph> {
    build_model(ModelMeta { arch: Arch::Ctc, r, act }, seed)
}

pub fn build_psc(r: usize, act: Activation, seed: u64) -> Result<ModelGraph> {
    build_model(ModelMeta { arch: Arch::Psc, r, act }, seed)
}

pub fn build_cts(r: usize, act: Activation, seed: u64) -> Result<ModelGraph> {
    build_model(ModelMeta { arch: Arch::Cts, r, act }, seed)
}

pub fn build_multistream(r: usize, act: Activation, seed: u64) -> Result<ModelGraph> {
    build_model(ModelMeta { arch: Arch::Multi, r, act }, seed)
}

/// Every single-stream variant: three architectures × two scales × two
/// activations.
pub fn single_stream_variants() -> Vec<ModelMeta> {
    let mut out = Vec::new();
    for arch in [Arch::Ctc, Arch::Psc, Arch::Cts] {
        for r in crate::models::SCALES {
            for act in Activation::ALL {
                out.push(ModelMeta { arch, r, act });
            }
        }
    }
    out
}
