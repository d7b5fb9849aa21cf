//! Acceptance suite. Prints one `criterion N (name): PASS|FAIL (detail)`
//! line per criterion; run with `--nocapture` to see them when all pass.

use std::path::Path;
use std::time::{Duration, Instant};

use bdsr_core::datasynth::netpbm::{decode_pbm, decode_pgm, encode_pbm, encode_pgm, write_pgm, write_pbm};
use bdsr_core::datasynth::{
    build_corpus, decode_archive, encode_archive, heldout_pages, read_archive, write_archive,
    BinaryImage, CorpusConfig, GlyphSet, PatchPairSet, Provenance,
};
use bdsr_core::layers::tconv2d_forward;
use bdsr_core::layers::ConvParams;
use bdsr_core::models::tables::{expected_trace, golden_variants};
use bdsr_core::models::{
    build_model, decode_model, encode_model, load_model, single_stream_variants, Activation, Arch,
    ModelGraph, ModelMeta, INPUT_SIDE,
};
use bdsr_core::numtensor::{Dims, Rng, Tensor};
use bdsr_core::srpipeline::{
    binarize, gamma_grid, nearest_baseline, power_law, score, upscale_page, GammaConfig, GrayImage,
    Scores, TileConfig,
};
use bdsr_core::trainer::{
    decode_checkpoint, encode_checkpoint, evaluate_loss, train, train_until, TrainConfig,
    TrainState,
};
use bdsr_core::verify::{gradient_checks, oracle_checks, Mutations, GRAD_TOL};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// 14 golden shape traces, zero tolerance, under one second.
fn shape_tables() -> Outcome {
    let t = Instant::now();
    let variants = golden_variants();
    let mut matched = 0;
    let mut bad = Vec::new();
    for meta in &variants {
        let got = build_model(*meta, 0).unwrap().shape_trace(INPUT_SIDE).unwrap();
        let want = expected_trace(*meta).unwrap();
        let side = 16 * meta.r;
        let out_ok = got.last().map(|(_, s)| *s) == Some([side, side, 1]);
        if got == want && out_ok {
            matched += 1;
        } else {
            bad.push(meta.to_string());
        }
    }
    let el = t.elapsed();
    outcome(
        matched == 14 && variants.len() == 14 && el < Duration::from_secs(1),
        format!("{matched}/14 traces match in {:.3}s {bad:?}", secs(el)),
    )
}

/// `o' = i' + k − 1` over `{4..32} × {3, 5, 9, 17, 33}`.
fn size_formula() -> Outcome {
    let mut rng = Rng::new(2);
    let mut cases = 0;
    let mut bad = Vec::new();
    for i in 4..=32usize {
        for k in [3usize, 5, 9, 17, 33] {
            let p = ConvParams::he_normal(k, 1, 2, &mut rng).unwrap();
            let x = Tensor::randn(Dims::new(1, i, i, 1).unwrap(), 1.0, &mut rng).unwrap();
            let d = tconv2d_forward(&x, &p).unwrap().dims();
            if d.h != i + k - 1 || d.w != i + k - 1 {
                bad.push((i, k));
            }
            cases += 1;
        }
    }
    outcome(bad.is_empty() && cases == 145, format!("{cases} cases, mismatches {bad:?}"))
}

/// Finite differences at `≤ 1e−5` over at least 200 trials in under 30 s.
fn gradients() -> Outcome {
    let t = Instant::now();
    let trials = 40;
    let checks = gradient_checks(trials, 2024);
    let el = t.elapsed();
    let total = trials * checks.len();
    let names: Vec<&str> = checks.iter().map(|c| c.name.as_str()).collect();
    let covered = ["conv", "tconv", "prelu", "merge", "subpixel", "mse"]
        .iter()
        .all(|op| names.contains(&format!("grad/{op}").as_str()));
    let failing: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.line()).collect();
    outcome(
        covered && failing.is_empty() && total >= 200 && el < Duration::from_secs(30),
        format!(
            "{total} trials over {} ops at tol {GRAD_TOL:e} in {:.2}s {failing:?}",
            checks.len(),
            secs(el)
        ),
    )
}

/// Fast vs naive and adjointness at `1e−10`; subpixel and shuffle exact.
fn oracles() -> Outcome {
    let checks = oracle_checks(Mutations::default(), 77);
    let detail: Vec<String> = checks.iter().map(|c| c.line()).collect();
    let want = ["fast_vs_naive", "adjointness", "subpixel_reference", "shuffle_bijection"];
    let present = want.iter().all(|w| checks.iter().any(|c| c.name == *w));
    outcome(present && checks.iter().all(|c| c.pass), detail.join("; "))
}

const SMOKE_STEPS: u64 = 2000;
const SMOKE_CHECK_EVERY: u64 = 100;

fn overfit_corpus(r: usize) -> PatchPairSet {
    let cfg = CorpusConfig {
        r,
        seed: 3,
        pages: 2,
        page_scale: 40,
        classes: vec![Provenance::Decimated],
        max_pairs_per_class: 64,
        ..CorpusConfig::default()
    };
    let set = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
    assert_eq!(set.len(), 64);
    set
}

/// Every single-stream variant cuts MSE on 64 pairs by 100× within 2000
/// Adam steps at the default hyperparameters; all runs under 15 minutes.
fn smoke_matrix() -> Outcome {
    let t = Instant::now();
    let sets = [overfit_corpus(2), overfit_corpus(4)];
    let mut rows = Vec::new();
    let mut all = true;
    for meta in single_stream_variants() {
        let set = &sets[usize::from(meta.r == 4)];
        let g = build_model(meta, 1).unwrap();
        let l0 = evaluate_loss(&g, set).unwrap();
        let cfg = TrainConfig {
            batch_size: if meta.r == 2 { 8 } else { 4 },
            epochs: u64::MAX,
            max_steps: Some(SMOKE_STEPS),
            seed: 1,
            ..TrainConfig::default()
        };
        assert_eq!(cfg.hyper, bdsr_core::numtensor::AdamHyper::default());
        let mut state = TrainState::new(g, &cfg).unwrap();
        let mut best = l0;
        while state.step < SMOKE_STEPS && l0 / best < 100.0 {
            let next = state.step + SMOKE_CHECK_EVERY;
            train_until(&mut state, set, &cfg, next).unwrap();
            best = best.min(evaluate_loss(&state.graph, set).unwrap());
        }
        let ratio = l0 / best;
        all &= ratio >= 100.0;
        let line = format!("{meta} {ratio:.1}x@{}", state.step);
        println!("  smoke {line}");
        rows.push(line);
    }
    let el = t.elapsed();
    outcome(
        all && el < Duration::from_secs(15 * 60),
        format!("{:.0}s; {}", secs(el), rows.join(", ")),
    )
}

fn mean(v: &[Scores]) -> Scores {
    let n = v.len() as f64;
    Scores {
        psnr: v.iter().map(|s| s.psnr).sum::<f64>() / n,
        fscore: v.iter().map(|s| s.fscore).sum::<f64>() / n,
    }
}

/// Trained CTS ×2 beats nearest-neighbour by 1 dB and 0.02 F-score on
/// held-out decimated pages, and CTS ≥ CTC, PSC in F-score.
fn sr_benefit() -> Outcome {
    let cfg = CorpusConfig {
        r: 2,
        seed: 5,
        pages: 8,
        max_pairs_per_class: 2000,
        ..CorpusConfig::default()
    };
    let glyphs = GlyphSet::builtin();
    let set = build_corpus(&cfg, &glyphs).unwrap();
    let pages = heldout_pages(&cfg, &glyphs, 4, 99).unwrap();
    let gc = GammaConfig::default();
    let tc = TileConfig::default();
    let base: Vec<Scores> = pages
        .iter()
        .map(|(lr, hr)| score(&nearest_baseline(lr, 2).unwrap(), hr, &gc).unwrap())
        .collect();
    let base = mean(&base);
    let mut res = Vec::new();
    for arch in [Arch::Cts, Arch::Ctc, Arch::Psc] {
        let meta = ModelMeta {
            arch,
            r: 2,
            act: Activation::Relu,
        };
        let tcfg = TrainConfig {
            batch_size: 16,
            epochs: u64::MAX,
            max_steps: Some(4000),
            seed: 1,
            ..TrainConfig::default()
        };
        let (state, _) = train(build_model(meta, 1).unwrap(), &set, &tcfg).unwrap();
        let s: Vec<Scores> = pages
            .iter()
            .map(|(lr, hr)| score(&upscale_page(lr, &state.graph, &tc).unwrap(), hr, &gc).unwrap())
            .collect();
        let m = mean(&s);
        println!("  sr {meta}: psnr {:.3} fscore {:.4}", m.psnr, m.fscore);
        res.push(m);
    }
    let (cts, ctc, psc) = (res[0], res[1], res[2]);
    let pass = cts.psnr >= base.psnr + 1.0
        && cts.fscore >= base.fscore + 0.02
        && cts.fscore >= ctc.fscore
        && cts.fscore >= psc.fscore;
    outcome(
        pass,
        format!(
            "nn {:.3}dB/{:.4}, cts {:.3}dB/{:.4}, ctc F {:.4}, psc F {:.4}",
            base.psnr, base.fscore, cts.psnr, cts.fscore, ctc.fscore, psc.fscore
        ),
    )
}

fn small_trained_cts() -> ModelGraph {
    let cfg = CorpusConfig {
        pages: 2,
        lines: 3,
        cols: 8,
        classes: vec![Provenance::Decimated],
        max_pairs_per_class: 64,
        ..CorpusConfig::default()
    };
    let set = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
    let tcfg = TrainConfig {
        batch_size: 8,
        epochs: u64::MAX,
        max_steps: Some(150),
        ..TrainConfig::default()
    };
    let meta = ModelMeta {
        arch: Arch::Cts,
        r: 2,
        act: Activation::Prelu,
    };
    train(build_model(meta, 4).unwrap(), &set, &tcfg).unwrap().0.graph
}

fn test_pages(count: usize, r: usize) -> Vec<(BinaryImage, BinaryImage)> {
    let cfg = CorpusConfig {
        r,
        ..CorpusConfig::default()
    };
    heldout_pages(&cfg, &GlyphSet::builtin(), count, 5).unwrap()
}

/// γ = 1 is a bit-exact no-op after binarization; ink count is monotone
/// non-increasing in γ over the sweep grid.
fn power_law_props(g: &ModelGraph) -> Outcome {
    let pages = test_pages(3, 2);
    let t = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (lr, _) in &pages {
        let gray = upscale_page(lr, g, &TileConfig::default()).unwrap();
        let plain = binarize(&gray, 0.5).unwrap();
        let one = binarize(&power_law(&gray, &GammaConfig::with_gamma(1.0).unwrap()).unwrap(), 0.5).unwrap();
        ok &= plain == one;
        let counts: Vec<usize> = gamma_grid()
            .into_iter()
            .map(|gm| {
                let out = power_law(&gray, &GammaConfig::with_gamma(gm).unwrap()).unwrap();
                binarize(&out, 0.5).unwrap().ink_count()
            })
            .collect();
        ok &= counts.windows(2).all(|w| w[0] >= w[1]);
        detail.push(format!("{:?}", counts));
    }
    let el = t.elapsed();
    outcome(
        ok && el < Duration::from_secs(5),
        format!("{:.2}s; ink by gamma 0.1..1.0: {}", secs(el), detail.join(" ")),
    )
}

/// BDPA and BDSR save→load→save are byte-identical; PBM and PGM round-trip
/// bit-exact.
fn round_trips(g: &ModelGraph, dir: &Path) -> Outcome {
    let mut fails = Vec::new();
    let cfg = CorpusConfig {
        pages: 1,
        max_pairs_per_class: 300,
        ..CorpusConfig::default()
    };
    let set = build_corpus(&cfg, &GlyphSet::builtin()).unwrap();
    let path = dir.join("rt.bdpa");
    write_archive(&set, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    let back = read_archive(&path).unwrap();
    let same_pixels = |a: &PatchPairSet| {
        a.r() == set.r()
            && a.len() == set.len()
            && a.pairs().iter().zip(set.pairs()).all(|(x, y)| {
                x.provenance == y.provenance && x.lr.bits() == y.lr.bits() && x.hr.bits() == y.hr.bits()
            })
    };
    if !same_pixels(&back) || encode_archive(&back) != first || encode_archive(&set) != first {
        fails.push("bdpa");
    }
    if encode_archive(&decode_archive(&first).unwrap()) != first {
        fails.push("bdpa bytes");
    }

    let mut models = vec![g.clone()];
    for (i, meta) in golden_variants().into_iter().enumerate() {
        models.push(build_model(meta, i as u64).unwrap());
    }
    for m in &models {
        let bytes = encode_model(m);
        let (back, used) = decode_model(&bytes).unwrap();
        if used != bytes.len() || encode_model(&back) != bytes || &back != m {
            fails.push("bdsr");
        }
    }
    let state = TrainState::new(g.clone(), &TrainConfig::default()).unwrap();
    let ck = encode_checkpoint(&state);
    if encode_checkpoint(&decode_checkpoint(&ck).unwrap()) != ck {
        fails.push("checkpoint");
    }
    let mpath = dir.join("rt.bdsr");
    std::fs::write(&mpath, encode_model(g)).unwrap();
    if encode_model(&load_model(&mpath).unwrap()) != std::fs::read(&mpath).unwrap() {
        fails.push("bdsr file");
    }

    let mut images = 0;
    for (lr, hr) in test_pages(3, 2).iter().chain(&test_pages(2, 4)) {
        for img in [lr, hr] {
            let bytes = encode_pbm(img);
            let back = decode_pbm(&bytes).unwrap();
            if back.bits() != img.bits() || (back.h(), back.w()) != (img.h(), img.w()) || encode_pbm(&back) != bytes {
                fails.push("pbm");
            }
            images += 1;
        }
        if lr.h() == hr.h() / 2 {
            let gray = upscale_page(lr, g, &TileConfig::default()).unwrap().to_bytes();
            let bytes = encode_pgm(&gray);
            let back = decode_pgm(&bytes).unwrap();
            if back != gray || encode_pgm(&back) != bytes {
                fails.push("pgm");
            }
            let img = GrayImage::from_bytes(&back).unwrap();
            if img.to_bytes() != gray {
                fails.push("pgm gray");
            }
        }
    }
    for p in set.pairs() {
        for img in [&p.lr, &p.hr] {
            if decode_pbm(&encode_pbm(img)).unwrap().bits() != img.bits() {
                fails.push("pbm patch");
            }
        }
    }
    outcome(
        fails.is_empty(),
        format!(
            "{} pairs, {} models, {images} pages; failures {fails:?}",
            set.len(),
            models.len()
        ),
    )
}

/// One synth→train→upscale run; returns archive, log and image bytes.
fn pipeline_run(dir: &Path) -> [Vec<u8>; 4] {
    let cfg = CorpusConfig {
        seed: 11,
        pages: 2,
        max_pairs_per_class: 100,
        ..CorpusConfig::default()
    };
    let glyphs = GlyphSet::builtin();
    let archive = dir.join("corpus.bdpa");
    write_archive(&build_corpus(&cfg, &glyphs).unwrap(), &archive).unwrap();
    let set = read_archive(&archive).unwrap();
    let (log, ckpt) = (dir.join("train.log"), dir.join("model.bdsr"));
    let tcfg = TrainConfig {
        batch_size: 8,
        epochs: u64::MAX,
        max_steps: Some(40),
        seed: 11,
        checkpoint_every: 10,
        checkpoint_path: Some(ckpt.clone()),
        log_path: Some(log.clone()),
        ..TrainConfig::default()
    };
    let meta = ModelMeta {
        arch: Arch::Multi,
        r: 2,
        act: Activation::Prelu,
    };
    train(build_model(meta, 11).unwrap(), &set, &tcfg).unwrap();
    let model = load_model(&ckpt).unwrap();
    let (lr, _) = heldout_pages(&cfg, &glyphs, 1, 3).unwrap().remove(0);
    let gray = upscale_page(&lr, &model, &TileConfig::default()).unwrap();
    let (pbm, pgm) = (dir.join("out.pbm"), dir.join("out.pgm"));
    write_pbm(&binarize(&gray, 0.5).unwrap(), &pbm).unwrap();
    write_pgm(&gray.to_bytes(), &pgm).unwrap();
    [archive, log, pbm, pgm].map(|p| std::fs::read(p).unwrap())
}

/// Two runs with the same seeds (the second on three worker threads)
/// produce identical bytes.
fn determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("run_a"), dir.join("run_b"));
    std::fs::create_dir_all(&a).unwrap();
    std::fs::create_dir_all(&b).unwrap();
    let first = pipeline_run(&a);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let second = pool.install(|| pipeline_run(&b));
    let names = ["archive", "loss log", "pbm", "pgm"];
    let diff: Vec<&str> = names
        .iter()
        .zip(first.iter().zip(&second))
        .filter(|(_, (x, y))| x != y)
        .map(|(n, _)| *n)
        .collect();
    let sizes: Vec<usize> = first.iter().map(Vec::len).collect();
    outcome(
        diff.is_empty() && sizes.iter().all(|&s| s > 0),
        format!("bytes {sizes:?}; differing {diff:?}"),
    )
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |n: usize, name: &'static str, o: Outcome| {
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n} ({name}): {status} ({})", o.detail);
        results.push((n, name, o));
    };
    record(1, "shape tables", shape_tables());
    record(2, "tconv size formula", size_formula());
    record(3, "gradient correctness", gradients());
    record(4, "oracle equivalences", oracles());
    let g = small_trained_cts();
    record(7, "power law", power_law_props(&g));
    record(8, "format round-trips", round_trips(&g, dir.path()));
    record(9, "determinism", determinism(dir.path()));
    record(6, "sr benefit", sr_benefit());
    record(5, "trainability smoke matrix", smoke_matrix());

    results.sort_by_key(|r| r.0);
    println!("summary:");
    for (n, name, o) in &results {
        println!("  {n}. {name}: {}", if o.pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
