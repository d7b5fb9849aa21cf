//! Subcommand bodies. Each prints `key=value` result lines on stdout.

use bdsr_core::datasynth::netpbm::{read_pbm, write_pbm, write_pgm};
use bdsr_core::datasynth::{
    build_corpus, heldout_pages, read_archive, write_archive, CorpusConfig, GlyphSet, Provenance,
};
use bdsr_core::models::{build_model, load_model, ModelGraph, ModelMeta};
use bdsr_core::srpipeline::{
    binarize, format_psnr, gamma_sweep, nearest_baseline, power_law, score, upscale_page,
    GammaConfig, Scores, TileConfig,
};
use bdsr_core::trainer::{self, evaluate_loss, TrainConfig};
use bdsr_core::verify::{all_pass, run_all, Mutations};
use bdsr_core::{Error, Result};

use crate::config::Settings;

/// Stream id of the held-out evaluation pages.
pub const HELDOUT_STREAM: u64 = 0x4845_4c44;

pub fn corpus_config(s: &Settings, r: usize) -> CorpusConfig {
    CorpusConfig {
        r,
        seed: s.seed,
        pages: s.pages,
        lines: s.lines,
        cols: s.cols,
        page_scale: s.page_scale,
        mask_mu: s.mask_mu,
        mask_sigma_min: s.mask_sigma_min,
        mask_sigma_max: s.mask_sigma_max,
        mask_threshold: s.mask_threshold,
        glyph_fill: s.glyph_fill,
        glyph_stroke: s.glyph_stroke,
        max_pairs_per_class: s.max_pairs,
        classes: s.classes.clone(),
        ..CorpusConfig::default()
    }
}

pub fn synth(s: &Settings) -> Result<()> {
    let out = s.require(&s.output, "--out")?;
    let set = build_corpus(&corpus_config(s, s.r), &GlyphSet::builtin())?;
    write_archive(&set, out)?;
    let mut line = format!("pairs={} r={}", set.len(), set.r());
    for p in [
        Provenance::Decimated,
        Provenance::Masked,
        Provenance::Glyph,
        Provenance::Rendered,
    ] {
        line.push_str(&format!(" {}={}", p.name(), set.count(p)));
    }
    println!("{line}");
    Ok(())
}

fn train_config(s: &Settings) -> TrainConfig {
    TrainConfig {
        batch_size: s.batch_size,
        epochs: s.epochs,
        max_steps: s.max_steps,
        hyper: s.hyper,
        seed: s.seed,
        checkpoint_every: s.checkpoint_every,
        checkpoint_path: s.checkpoint.clone().or_else(|| s.resume.clone()),
        log_path: s.log.clone(),
    }
}

/// Reject explicit `--arch`/`--r`/`--act` that disagree with a loaded model.
fn check_meta(s: &Settings, meta: ModelMeta, what: &str) -> Result<()> {
    let clash = |key: &str, want: String, have: String| {
        Err(Error::Config(format!("--{key} {want} but {what} is {have}")))
    };
    if s.is_explicit("r") && s.r != meta.r {
        return clash("r", s.r.to_string(), meta.r.to_string());
    }
    if s.is_explicit("arch") && s.arch != meta.arch {
        return clash("arch", s.arch.name().into(), meta.arch.name().into());
    }
    if s.is_explicit("act") && s.act != meta.act {
        return clash("act", s.act.name().into(), meta.act.name().into());
    }
    Ok(())
}

pub fn train(s: &Settings) -> Result<()> {
    let archive = s.require(&s.archive, "--archive")?;
    let set = read_archive(archive)?;
    let cfg = train_config(s);
    if cfg.checkpoint_path.is_none() {
        return Err(Error::Config("missing required --checkpoint".into()));
    }
    let (state, records) = match &s.resume {
        Some(path) => {
            let state = trainer::load_checkpoint(path)?;
            check_meta(s, state.graph.meta(), "the checkpoint")?;
            trainer::resume(path, &set, &cfg)?
        }
        None => {
            let meta = ModelMeta {
                arch: s.arch,
                r: s.r,
                act: s.act,
            };
            trainer::train(build_model(meta, s.seed)?, &set, &cfg)?
        }
    };
    let last = records
        .last()
        .map_or_else(|| "none".to_string(), |r| r.loss.to_string());
    println!(
        "model={} steps={} new_steps={} last_loss={last}",
        state.graph.meta(),
        state.step,
        records.len()
    );
    Ok(())
}

fn load(s: &Settings) -> Result<ModelGraph> {
    let path = s.require(&s.model, "--model")?;
    let g = load_model(path)?;
    check_meta(s, g.meta(), &format!("model {}", path.display()))?;
    Ok(g)
}

fn gamma_config(s: &Settings) -> Result<GammaConfig> {
    let gc = GammaConfig {
        gamma: if s.no_gamma { 1.0 } else { s.gamma },
        threshold: s.threshold,
        ..GammaConfig::default()
    };
    gc.validate()?;
    Ok(gc)
}

pub fn upscale(s: &Settings) -> Result<()> {
    let g = load(s)?;
    let input = s.require(&s.input, "--input")?;
    let out = s.require(&s.output, "--out")?;
    let tc = TileConfig::new(s.stride)?;
    let gc = gamma_config(s)?;
    if s.gamma_sweep && s.gt.is_none() {
        return Err(Error::Config("--gamma-sweep needs --gt".into()));
    }
    let page = read_pbm(input)?;
    let gray = upscale_page(&page, &g, &tc)?;
    let bin = binarize(&power_law(&gray, &gc)?, gc.threshold)?;
    write_pbm(&bin, out)?;
    if let Some(path) = &s.gray_output {
        write_pgm(&gray.to_bytes(), path)?;
    }
    println!("h={} w={} gamma={} ink={}", bin.h(), bin.w(), gc.gamma, bin.ink_count());
    if let Some(path) = &s.gt {
        let gt = read_pbm(path)?;
        println!("{}", score(&gray, &gt, &gc)?.to_line());
        if s.gamma_sweep {
            let sweep = gamma_sweep(&gray, &gt, gc.threshold)?;
            for (gamma, f) in &sweep.scores {
                println!("sweep gamma={gamma:.1} fscore={f:.6}");
            }
            println!(
                "best_gamma={:.1} best_fscore={:.6}",
                sweep.best_gamma, sweep.best_fscore
            );
        }
    }
    Ok(())
}

fn mean_scores(v: &[Scores]) -> Scores {
    let n = v.len() as f64;
    Scores {
        psnr: v.iter().map(|s| s.psnr).sum::<f64>() / n,
        fscore: v.iter().map(|s| s.fscore).sum::<f64>() / n,
    }
}

pub fn eval(s: &Settings) -> Result<()> {
    let g = load(s)?;
    let r = g.meta().r;
    if let Some(path) = &s.archive {
        println!("loss={}", evaluate_loss(&g, &read_archive(path)?)?);
    }
    if s.heldout == 0 {
        return Ok(());
    }
    let tc = TileConfig::new(s.stride)?;
    let gc = gamma_config(s)?;
    let pages = heldout_pages(&corpus_config(s, r), &GlyphSet::builtin(), s.heldout, HELDOUT_STREAM)?;
    let (mut model, mut base) = (Vec::new(), Vec::new());
    for (i, (lr, hr)) in pages.iter().enumerate() {
        let m = score(&upscale_page(lr, &g, &tc)?, hr, &gc)?;
        let b = score(&nearest_baseline(lr, r)?, hr, &gc)?;
        println!(
            "page={i} {} baseline_psnr={} baseline_fscore={:.6}",
            m.to_line(),
            format_psnr(b.psnr),
            b.fscore
        );
        model.push(m);
        base.push(b);
    }
    let (m, b) = (mean_scores(&model), mean_scores(&base));
    println!(
        "mean {} baseline_psnr={} baseline_fscore={:.6}",
        m.to_line(),
        format_psnr(b.psnr),
        b.fscore
    );
    Ok(())
}

/// Prints one line per check; true iff all pass.
pub fn verify(_s: &Settings, mutate_tconv_flip: bool) -> bool {
    let checks = run_all(Mutations {
        tconv_no_flip: mutate_tconv_flip,
    });
    for c in &checks {
        println!("{}", c.line());
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    println!("summary: {passed}/{} passed", checks.len());
    all_pass(&checks)
}
