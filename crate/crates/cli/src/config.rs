//! Flat `key = value` run configuration. Flags are applied after the file
//! through the same parser, so they win.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use bdsr_core::datasynth::Provenance;
use bdsr_core::models::{Activation, Arch};
use bdsr_core::numtensor::AdamHyper;
use bdsr_core::{Error, Result};

/// Every accepted key, in documentation order.
pub const KEYS: &[&str] = &[
    "seed",
    "arch",
    "r",
    "act",
    "threads",
    "classes",
    "pages",
    "lines",
    "cols",
    "page_scale",
    "mask_mu",
    "mask_sigma_min",
    "mask_sigma_max",
    "mask_threshold",
    "glyph_fill",
    "glyph_stroke",
    "max_pairs",
    "batch_size",
    "epochs",
    "max_steps",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "checkpoint_every",
    "archive",
    "model",
    "checkpoint",
    "log",
    "resume",
    "input",
    "output",
    "gray_output",
    "gt",
    "stride",
    "gamma",
    "no_gamma",
    "gamma_sweep",
    "threshold",
    "heldout",
];

#[derive(Clone, Debug)]
pub struct Settings {
    pub seed: u64,
    pub arch: Arch,
    pub r: usize,
    pub act: Activation,
    pub threads: Option<usize>,
    pub classes: Vec<Provenance>,
    pub pages: usize,
    pub lines: usize,
    pub cols: usize,
    pub page_scale: usize,
    pub mask_mu: f64,
    pub mask_sigma_min: f64,
    pub mask_sigma_max: f64,
    pub mask_threshold: f64,
    pub glyph_fill: f64,
    pub glyph_stroke: f64,
    pub max_pairs: usize,
    pub batch_size: usize,
    pub epochs: u64,
    pub max_steps: Option<u64>,
    pub hyper: AdamHyper,
    pub checkpoint_every: u64,
    pub archive: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub log: Option<PathBuf>,
    pub resume: Option<PathBuf>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub gray_output: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub stride: usize,
    pub gamma: f64,
    pub no_gamma: bool,
    pub gamma_sweep: bool,
    pub threshold: f64,
    pub heldout: usize,
    /// Keys set by the file or a flag.
    pub explicit: BTreeSet<String>,
}

impl Default for Settings {
    fn default() -> Self {
        use bdsr_core::datasynth::CorpusConfig;
        let c = CorpusConfig::default();
        Settings {
            seed: 1,
            arch: Arch::Cts,
            r: c.r,
            act: Activation::Relu,
            threads: None,
            classes: c.classes,
            pages: c.pages,
            lines: c.lines,
            cols: c.cols,
            page_scale: c.page_scale,
            mask_mu: c.mask_mu,
            mask_sigma_min: c.mask_sigma_min,
            mask_sigma_max: c.mask_sigma_max,
            mask_threshold: c.mask_threshold,
            glyph_fill: c.glyph_fill,
            glyph_stroke: c.glyph_stroke,
            max_pairs: c.max_pairs_per_class,
            batch_size: bdsr_core::trainer::DEFAULT_BATCH_SIZE,
            epochs: 1,
            max_steps: None,
            hyper: AdamHyper::default(),
            checkpoint_every: 0,
            archive: None,
            model: None,
            checkpoint: None,
            log: None,
            resume: None,
            input: None,
            output: None,
            gray_output: None,
            gt: None,
            stride: bdsr_core::srpipeline::DEFAULT_STRIDE,
            gamma: 1.0,
            no_gamma: false,
            gamma_sweep: false,
            threshold: bdsr_core::srpipeline::DEFAULT_THRESHOLD,
            heldout: 4,
            explicit: BTreeSet::new(),
        }
    }
}

fn num<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("invalid value {v:?}"))
}

fn flag(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got {v:?}")),
    }
}

fn classes(v: &str) -> std::result::Result<Vec<Provenance>, String> {
    let mut out = Vec::new();
    for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let p = Provenance::parse(name).ok_or_else(|| {
            format!("unknown class {name:?} (decimated, masked, glyph, rendered)")
        })?;
        if !out.contains(&p) {
            out.push(p);
        }
    }
    if out.is_empty() {
        return Err("no classes given".into());
    }
    Ok(out)
}

impl Settings {
    /// Set one key; `origin` names the flag or file line in errors.
    pub fn apply(&mut self, key: &str, value: &str, origin: &str) -> Result<()> {
        let v = value.trim();
        let res: std::result::Result<(), String> = (|| {
            match key {
                "seed" => self.seed = num(v)?,
                "arch" => {
                    self.arch = Arch::parse(v)
                        .ok_or_else(|| format!("unknown architecture {v:?} (ctc, psc, cts, multi)"))?
                }
                "r" => {
                    let r: usize = num(v)?;
                    if !bdsr_core::models::SCALES.contains(&r) {
                        return Err(format!("scale factor must be 2 or 4, got {r}"));
                    }
                    self.r = r;
                }
                "act" => {
                    self.act = Activation::parse(v)
                        .ok_or_else(|| format!("unknown activation {v:?} (relu, prelu)"))?
                }
                "threads" => {
                    let n: usize = num(v)?;
                    if n == 0 {
                        return Err("thread count must be at least 1".into());
                    }
                    self.threads = Some(n);
                }
                "classes" => self.classes = classes(v)?,
                "pages" => self.pages = num(v)?,
                "lines" => self.lines = num(v)?,
                "cols" => self.cols = num(v)?,
                "page_scale" => self.page_scale = num(v)?,
                "mask_mu" => self.mask_mu = num(v)?,
                "mask_sigma_min" => self.mask_sigma_min = num(v)?,
                "mask_sigma_max" => self.mask_sigma_max = num(v)?,
                "mask_threshold" => self.mask_threshold = num(v)?,
                "glyph_fill" => self.glyph_fill = num(v)?,
                "glyph_stroke" => self.glyph_stroke = num(v)?,
                "max_pairs" => self.max_pairs = num(v)?,
                "batch_size" => self.batch_size = num(v)?,
                "epochs" => self.epochs = num(v)?,
                "max_steps" => self.max_steps = Some(num(v)?),
                "lr" => self.hyper.lr = num(v)?,
                "beta1" => self.hyper.beta1 = num(v)?,
                "beta2" => self.hyper.beta2 = num(v)?,
                "eps" => self.hyper.eps = num(v)?,
                "checkpoint_every" => self.checkpoint_every = num(v)?,
                "archive" => self.archive = Some(v.into()),
                "model" => self.model = Some(v.into()),
                "checkpoint" => self.checkpoint = Some(v.into()),
                "log" => self.log = Some(v.into()),
                "resume" => self.resume = Some(v.into()),
                "input" => self.input = Some(v.into()),
                "output" => self.output = Some(v.into()),
                "gray_output" => self.gray_output = Some(v.into()),
                "gt" => self.gt = Some(v.into()),
                "stride" => self.stride = num(v)?,
                "gamma" => {
                    let g: f64 = num(v)?;
                    if !(g > 0.0 && g.is_finite()) {
                        return Err(format!("gamma must be positive, got {g}"));
                    }
                    self.gamma = g;
                }
                "no_gamma" => self.no_gamma = flag(v)?,
                "gamma_sweep" => self.gamma_sweep = flag(v)?,
                "threshold" => self.threshold = num(v)?,
                "heldout" => self.heldout = num(v)?,
                _ => return Err(format!("unknown key {key:?}")),
            }
            Ok(())
        })();
        res.map_err(|e| Error::Config(format!("{origin}: {e}")))?;
        self.explicit.insert(key.to_string());
        Ok(())
    }

    /// Apply every `key = value` line of a config text. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn apply_text(&mut self, text: &str, source: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let origin = format!("{source}:{}", i + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}: expected key = value")))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Error::Config(format!("{origin}: unknown key {key:?}")));
            }
            self.apply(key, value, &origin)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.apply_text(&text, &path.display().to_string())
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.contains(key)
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| Error::Config(format!("missing required {flag}")))
    }
}
