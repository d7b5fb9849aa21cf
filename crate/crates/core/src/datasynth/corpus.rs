use rayon::prelude::*;

use crate::datasynth::glyphs::GlyphSet;
use crate::datasynth::image::{
    apply_mask, decimate, default_rotations, random_mask, render_glyph_set, MaskParams,
};
use crate::datasynth::page::{random_text, render_page_pair, PageLayout};
use crate::datasynth::patches::{extract_patch_pairs, PatchPair, PatchPairSet, Provenance, LR_SIDE};
use crate::error::{Error, Result};
use crate::numtensor::{derive_seed, Rng};

/// Corpus synthesis settings.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub r: usize,
    pub seed: u64,
    /// Pages generated for each page-based class.
    pub pages: usize,
    pub lines: usize,
    pub cols: usize,
    /// LR pixels per em.
    pub page_scale: usize,
    pub layout: PageLayout,
    pub mask_mu: f64,
    pub mask_sigma_min: f64,
    pub mask_sigma_max: f64,
    pub mask_threshold: f64,
    pub rotations: Vec<f64>,
    /// Fraction of the glyph image side covered by the glyph box.
    pub glyph_fill: f64,
    /// Stroke width in glyph-box units.
    pub glyph_stroke: f64,
    /// Cap on pairs kept per class (0 = keep all).
    pub max_pairs_per_class: usize,
    pub classes: Vec<Provenance>,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            r: 2,
            seed: 1,
            pages: 4,
            lines: 4,
            cols: 12,
            page_scale: 10,
            layout: PageLayout::default(),
            mask_mu: 0.0,
            mask_sigma_min: 0.5,
            mask_sigma_max: 2.0,
            mask_threshold: -1.0,
            rotations: default_rotations(),
            glyph_fill: 0.7,
            glyph_stroke: 0.16,
            max_pairs_per_class: 2000,
            classes: Provenance::ALL.to_vec(),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        crate::models::check_scale(self.r)?;
        if self.pages == 0 || self.lines == 0 || self.cols == 0 {
            return Err(Error::Config("pages, lines and cols must be positive".into()));
        }
        if !(self.mask_sigma_min > 0.0 && self.mask_sigma_min <= self.mask_sigma_max)
            || !self.mask_sigma_max.is_finite()
        {
            return Err(Error::Config(format!(
                "mask sigma range [{}, {}] must be positive and ordered",
                self.mask_sigma_min, self.mask_sigma_max
            )));
        }
        if self.mask_threshold.is_nan() || self.mask_mu.is_nan() {
            return Err(Error::Config("mask parameters must not be NaN".into()));
        }
        if !(self.glyph_fill > 0.0 && self.glyph_fill <= 1.0) || !(self.glyph_stroke > 0.0) {
            return Err(Error::Config("glyph fill must be in (0, 1] and stroke positive".into()));
        }
        if self.classes.is_empty() {
            return Err(Error::Config("no provenance classes selected".into()));
        }
        Ok(())
    }
}

const STREAM_DECIMATED: u64 = 1;
const STREAM_MASKED: u64 = 2;
const STREAM_RENDERED: u64 = 4;
const STREAM_SUBSAMPLE: u64 = 5;

fn page_text(cfg: &CorpusConfig, set: &GlyphSet, stream: u64, page: usize) -> String {
    let mut rng = Rng::new(derive_seed(derive_seed(cfg.seed, stream), page as u64));
    random_text(set, cfg.lines, cfg.cols, &mut rng)
}

/// Pairs from HR pages decimated by `r` (shared by the decimated and masked
/// classes, which start from the same pages).
fn decimated_pages(cfg: &CorpusConfig, set: &GlyphSet) -> Result<Vec<PatchPairSet>> {
    (0..cfg.pages)
        .into_par_iter()
        .map(|i| {
            let text = page_text(cfg, set, STREAM_DECIMATED, i);
            let (_, hr) = render_page_pair(&text, set, &cfg.layout, cfg.page_scale, cfg.r)?;
            let lr = decimate(&hr, cfg.r)?;
            extract_patch_pairs(&lr, &hr, cfg.r, Provenance::Decimated)
        })
        .collect()
}

fn masked(cfg: &CorpusConfig, pages: &[PatchPairSet]) -> Result<PatchPairSet> {
    let base = derive_seed(cfg.seed, STREAM_MASKED);
    let per_page: Vec<PatchPairSet> = pages
        .par_iter()
        .enumerate()
        .map(|(i, page)| {
            let page_seed = derive_seed(base, i as u64);
            let sigma = Rng::new(page_seed).uniform_range(cfg.mask_sigma_min, cfg.mask_sigma_max);
            let mut out = PatchPairSet::new(cfg.r)?;
            for (j, p) in page.pairs().iter().enumerate() {
                let mp = MaskParams {
                    mu: cfg.mask_mu,
                    sigma,
                    threshold: cfg.mask_threshold,
                    seed: derive_seed(page_seed, j as u64 + 1),
                };
                let mask = random_mask(LR_SIDE, LR_SIDE, &mp)?;
                out.push(PatchPair {
                    lr: apply_mask(&p.lr, &mask)?,
                    hr: p.hr.clone(),
                    provenance: Provenance::Masked,
                })?;
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    concat(cfg.r, per_page)
}

fn glyphs(cfg: &CorpusConfig, set: &GlyphSet) -> Result<PatchPairSet> {
    let side = LR_SIDE * cfg.r;
    let bitmaps = set
        .glyphs()
        .iter()
        .map(|g| g.render(side, cfg.glyph_fill, cfg.glyph_stroke))
        .collect::<Result<Vec<_>>>()?;
    let mut out = PatchPairSet::new(cfg.r)?;
    for hr in render_glyph_set(&bitmaps, &cfg.rotations)? {
        let lr = decimate(&hr, cfg.r)?;
        out.push(PatchPair {
            lr,
            hr,
            provenance: Provenance::Glyph,
        })?;
    }
    Ok(out)
}

fn rendered(cfg: &CorpusConfig, set: &GlyphSet) -> Result<PatchPairSet> {
    let pages: Vec<PatchPairSet> = (0..cfg.pages)
        .into_par_iter()
        .map(|i| {
            let text = page_text(cfg, set, STREAM_RENDERED, i);
            let (lr, hr) = render_page_pair(&text, set, &cfg.layout, cfg.page_scale, cfg.r)?;
            extract_patch_pairs(&lr, &hr, cfg.r, Provenance::Rendered)
        })
        .collect::<Result<_>>()?;
    concat(cfg.r, pages)
}

fn concat(r: usize, parts: Vec<PatchPairSet>) -> Result<PatchPairSet> {
    let mut out = PatchPairSet::new(r)?;
    for p in parts {
        out.extend(p)?;
    }
    Ok(out)
}

/// Keep at most `cap` pairs, chosen by a seeded shuffle and kept in their
/// original order.
fn cap_pairs(set: PatchPairSet, cap: usize, seed: u64) -> PatchPairSet {
    if cap == 0 || set.len() <= cap {
        return set;
    }
    let mut idx: Vec<usize> = (0..set.len()).collect();
    Rng::new(seed).shuffle(&mut idx);
    idx.truncate(cap);
    idx.sort_unstable();
    set.subset(&idx)
}

/// Assemble the training corpus as the union of the selected provenance
/// classes, in the order decimated, masked, glyph, rendered.
pub fn build_corpus(cfg: &CorpusConfig, set: &GlyphSet) -> Result<PatchPairSet> {
    cfg.validate()?;
    let want = |p: Provenance| cfg.classes.contains(&p);
    let mut out = PatchPairSet::new(cfg.r)?;
    let sub = derive_seed(cfg.seed, STREAM_SUBSAMPLE);

    let dec_pages = if want(Provenance::Decimated) || want(Provenance::Masked) {
        decimated_pages(cfg, set)?
    } else {
        Vec::new()
    };
    if want(Provenance::Masked) {
        let m = masked(cfg, &dec_pages)?;
        let capped_dec = if want(Provenance::Decimated) {
            Some(cap_pairs(concat(cfg.r, dec_pages)?, cfg.max_pairs_per_class, derive_seed(sub, 0)))
        } else {
            None
        };
        if let Some(d) = capped_dec {
            out.extend(d)?;
        }
        out.extend(cap_pairs(m, cfg.max_pairs_per_class, derive_seed(sub, 1)))?;
    } else if want(Provenance::Decimated) {
        out.extend(cap_pairs(concat(cfg.r, dec_pages)?, cfg.max_pairs_per_class, derive_seed(sub, 0)))?;
    }
    if want(Provenance::Glyph) {
        out.extend(cap_pairs(glyphs(cfg, set)?, cfg.max_pairs_per_class, derive_seed(sub, 2)))?;
    }
    if want(Provenance::Rendered) {
        out.extend(cap_pairs(rendered(cfg, set)?, cfg.max_pairs_per_class, derive_seed(sub, 3)))?;
    }
    Ok(out)
}

/// Held-out evaluation pages: HR renderings at `r·page_scale` and their
/// decimated LR counterparts.
pub fn heldout_pages(
    cfg: &CorpusConfig,
    set: &GlyphSet,
    count: usize,
    stream: u64,
) -> Result<Vec<(crate::datasynth::BinaryImage, crate::datasynth::BinaryImage)>> {
    cfg.validate()?;
    (0..count)
        .map(|i| {
            let text = page_text(cfg, set, stream, i);
            let (_, hr) = render_page_pair(&text, set, &cfg.layout, cfg.page_scale, cfg.r)?;
            Ok((decimate(&hr, cfg.r)?, hr))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> CorpusConfig {
        CorpusConfig {
            pages: 2,
            lines: 2,
            cols: 6,
            max_pairs_per_class: 150,
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn all_four_classes_present() {
        for r in [2, 4] {
            let cfg = CorpusConfig { r, ..small() };
            let set = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
            for p in Provenance::ALL {
                assert!(set.count(p) > 0, "r={r} {p}");
                assert!(set.count(p) <= 150);
            }
            assert_eq!(set.count(Provenance::Glyph), 150);
            let total: usize = Provenance::ALL.iter().map(|&p| set.count(p)).sum();
            assert_eq!(total, set.len());
        }
    }

    #[test]
    fn class_filter_and_determinism() {
        let cfg = CorpusConfig { classes: vec![Provenance::Decimated], ..small() };
        let a = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
        assert_eq!(a.count(Provenance::Decimated), a.len());
        assert!(!a.is_empty());
        assert_eq!(a, build_corpus(&cfg, &GlyphSet::builtin()).unwrap());
        let other = CorpusConfig { seed: 2, ..cfg };
        assert_ne!(a, build_corpus(&other, &GlyphSet::builtin()).unwrap());
    }

    #[test]
    fn masked_pairs_are_subsets_of_decimated_lr() {
        let cfg = CorpusConfig {
            classes: vec![Provenance::Decimated, Provenance::Masked],
            max_pairs_per_class: 0,
            ..small()
        };
        let set = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
        let dec = set.filter(&[Provenance::Decimated]);
        let mask = set.filter(&[Provenance::Masked]);
        assert_eq!(dec.len(), mask.len());
        let mut dropped = 0;
        for (d, m) in dec.pairs().iter().zip(mask.pairs()) {
            assert_eq!(d.hr, m.hr);
            assert!(d.lr.bits().iter().zip(m.lr.bits()).all(|(a, b)| b <= a));
            dropped += d.lr.ink_count() - m.lr.ink_count();
        }
        assert!(dropped > 0);
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let cfg = small();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| build_corpus(&cfg, &GlyphSet::builtin()).unwrap());
        let b = three.install(|| build_corpus(&cfg, &GlyphSet::builtin()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_configs() {
        let set = GlyphSet::builtin();
        assert!(build_corpus(&CorpusConfig { r: 3, ..small() }, &set).is_err());
        assert!(build_corpus(&CorpusConfig { mask_sigma_min: 0.0, ..small() }, &set).is_err());
        assert!(build_corpus(&CorpusConfig { classes: vec![], ..small() }, &set).is_err());
    }
}
