use std::path::Path;
use std::process::{Command, Output};

use bdsr_core::datasynth::netpbm::{read_pbm, write_pbm};
use bdsr_core::datasynth::{heldout_pages, CorpusConfig, GlyphSet};

fn bdsr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bdsr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = bdsr(args);
    assert!(o.status.success(), "{args:?}: {}", stderr(&o));
    stdout(&o)
}

/// Value of `key=` on the first line that has it.
fn field(out: &str, key: &str) -> String {
    out.split_whitespace()
        .find_map(|t| t.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
        .to_string()
}

fn small_archive(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["synth", "--pages", "1", "--max-pairs", "40", "--out", p(&out)];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

#[test]
fn verify_passes_and_detects_the_flip_mutation() {
    let o = bdsr(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let out = stdout(&o);
    let traces: Vec<&str> = out.lines().filter(|l| l.starts_with("trace/")).collect();
    assert_eq!(traces.len(), 14);
    assert!(traces.iter().all(|l| l.contains(": PASS (")));
    assert!(out.lines().any(|l| l.starts_with("adjointness: PASS (")));

    let o = bdsr(&["verify", "--mutate-tconv-flip"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().any(|l| l.starts_with("adjointness: FAIL (")));
}

#[test]
fn synth_classes_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.bdpa");
    let out = ok(&["synth", "--pages", "1", "--max-pairs", "30", "--out", p(&a)]);
    for class in ["decimated", "masked", "glyph", "rendered"] {
        assert!(field(&out, class).parse::<usize>().unwrap() > 0, "{out}");
    }
    let b = dir.path().join("b.bdpa");
    ok(&["synth", "--pages", "1", "--max-pairs", "30", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let only = ok(&[
        "synth", "--pages", "1", "--classes", "decimated", "--out", p(&b),
    ]);
    assert!(field(&only, "decimated").parse::<usize>().unwrap() > 0);
    for class in ["masked", "glyph", "rendered"] {
        assert_eq!(field(&only, class), "0");
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("x.bdpa");
    std::fs::write(&cfg, format!("# corpus\nr = 4\npages = 1\nmax_pairs = 5\noutput = {}\n", p(&out))).unwrap();
    assert_eq!(field(&ok(&["synth", "--config", p(&cfg)]), "r"), "4");
    assert_eq!(field(&ok(&["synth", "--config", p(&cfg), "--r", "2"]), "r"), "2");

    std::fs::write(&cfg, "pages = 1\nlearning_rate = 0.1\n").unwrap();
    let o = bdsr(&["synth", "--config", p(&cfg), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("learning_rate"), "{}", stderr(&o));
}

#[test]
fn validation_and_io_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let archive = small_archive(dir.path(), "s.bdpa", &[]);
    let ckpt = dir.path().join("m.bdsr");
    for (flag, value) in [("--r", "3"), ("--arch", "srcnn"), ("--act", "tanh")] {
        let o = bdsr(&[
            "train", "--archive", p(&archive), "--checkpoint", p(&ckpt), flag, value,
        ]);
        assert_eq!(o.status.code(), Some(1), "{flag}");
        assert!(stderr(&o).contains(flag), "{}", stderr(&o));
    }
    let o = bdsr(&["train", "--bogus-flag"]);
    assert_eq!(o.status.code(), Some(1));

    let missing = dir.path().join("none.bdpa");
    let o = bdsr(&["train", "--archive", p(&missing), "--checkpoint", p(&ckpt)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("none.bdpa"));

    // A ×2 archive for a ×4 model.
    let o = bdsr(&[
        "train", "--archive", p(&archive), "--checkpoint", p(&ckpt), "--r", "4", "--max-steps", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn divergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let archive = small_archive(dir.path(), "s.bdpa", &[]);
    let ckpt = dir.path().join("m.bdsr");
    let o = bdsr(&[
        "train", "--archive", p(&archive), "--checkpoint", p(&ckpt), "--lr", "1000",
        "--batch-size", "8", "--epochs", "50",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("step"));
}

#[test]
fn resume_reproduces_the_uninterrupted_log() {
    let dir = tempfile::tempdir().unwrap();
    let archive = small_archive(dir.path(), "s.bdpa", &["--classes", "decimated"]);
    let base = ["--archive", p(&archive), "--batch-size", "4", "--epochs", "10", "--act", "prelu"];
    let (full_log, full_ckpt) = (dir.path().join("full.log"), dir.path().join("full.bdsr"));
    let mut args = vec!["train", "--max-steps", "8", "--log", p(&full_log), "--checkpoint", p(&full_ckpt)];
    args.extend_from_slice(&base);
    ok(&args);

    let (log, ckpt) = (dir.path().join("part.log"), dir.path().join("part.bdsr"));
    let mut args = vec!["train", "--max-steps", "3", "--log", p(&log), "--checkpoint", p(&ckpt)];
    args.extend_from_slice(&base);
    ok(&args);
    let mut args = vec!["train", "--max-steps", "8", "--log", p(&log), "--resume", p(&ckpt)];
    args.extend_from_slice(&base);
    let out = ok(&args);
    assert_eq!(field(&out, "new_steps"), "5");
    assert_eq!(std::fs::read(&full_log).unwrap(), std::fs::read(&log).unwrap());
    assert_eq!(std::fs::read(&full_ckpt).unwrap(), std::fs::read(&ckpt).unwrap());
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 8);
}

#[test]
fn overfit_corpus_reaches_the_loss_bound() {
    let dir = tempfile::tempdir().unwrap();
    let archive = dir.path().join("overfit.bdpa");
    ok(&[
        "synth", "--seed", "3", "--pages", "2", "--page-scale", "40", "--classes", "decimated",
        "--max-pairs", "64", "--out", p(&archive),
    ]);
    let ckpt = dir.path().join("m.bdsr");
    ok(&[
        "train", "--arch", "cts", "--r", "2", "--act", "prelu", "--archive", p(&archive),
        "--checkpoint", p(&ckpt), "--batch-size", "4", "--epochs", "1000", "--max-steps", "2000",
    ]);
    let out = ok(&["eval", "--model", p(&ckpt), "--archive", p(&archive), "--heldout", "0"]);
    let loss: f64 = field(&out, "loss").parse().unwrap();
    assert!(loss < 0.01, "{loss}");
}

/// A briefly trained ×2 model and one held-out page pair on disk.
fn model_and_page(dir: &Path) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let archive = small_archive(dir, "s.bdpa", &["--classes", "decimated"]);
    let ckpt = dir.join("m.bdsr");
    ok(&[
        "train", "--archive", p(&archive), "--checkpoint", p(&ckpt), "--batch-size", "4",
        "--max-steps", "30", "--epochs", "10",
    ]);
    let cfg = CorpusConfig {
        lines: 2,
        cols: 5,
        ..CorpusConfig::default()
    };
    let (lr, hr) = heldout_pages(&cfg, &GlyphSet::builtin(), 1, 77).unwrap().remove(0);
    let (lr_path, hr_path) = (dir.join("lr.pbm"), dir.join("hr.pbm"));
    write_pbm(&lr, &lr_path).unwrap();
    write_pbm(&hr, &hr_path).unwrap();
    (ckpt, lr_path, hr_path)
}

#[test]
fn upscale_outputs_metrics_and_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let (ckpt, lr, hr) = model_and_page(dir.path());
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["upscale", "--model", p(&ckpt), "--input", p(&lr), "--out", p(&out)];
        args.extend_from_slice(extra);
        (ok(&args), out)
    };
    let gray = dir.path().join("g.pgm");
    let (line, one) = run("one.pbm", &["--gamma", "1.0", "--gray-out", p(&gray)]);
    let (_, none) = run("none.pbm", &["--no-gamma"]);
    assert_eq!(std::fs::read(&one).unwrap(), std::fs::read(&none).unwrap());
    let lr_img = read_pbm(&lr).unwrap();
    let out_img = read_pbm(&one).unwrap();
    assert_eq!((out_img.h(), out_img.w()), (2 * lr_img.h(), 2 * lr_img.w()));
    assert!(std::fs::read(&gray).unwrap().starts_with(b"P5"));

    let mut last = field(&line, "ink").parse::<usize>().unwrap();
    for g in ["0.9", "0.7", "0.5"] {
        let (l, _) = run("g.pbm", &["--gamma", g]);
        let ink = field(&l, "ink").parse::<usize>().unwrap();
        assert!(ink >= last, "gamma {g}: {ink} < {last}");
        last = ink;
    }

    let (metrics, _) = run("m.pbm", &["--gt", p(&hr), "--gamma-sweep"]);
    assert!(metrics.contains("psnr=") && metrics.contains("fscore="));
    assert_eq!(metrics.lines().filter(|l| l.starts_with("sweep gamma=")).count(), 10);
    assert!(metrics.contains("best_gamma="));

    let o = bdsr(&[
        "upscale", "--model", p(&ckpt), "--input", p(&lr), "--out", p(&one), "--r", "4",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--r"));
}

#[test]
fn eval_reports_model_and_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let (ckpt, _, _) = model_and_page(dir.path());
    let out = ok(&["eval", "--model", p(&ckpt), "--heldout", "2"]);
    assert_eq!(out.lines().filter(|l| l.starts_with("page=")).count(), 2);
    let mean = out.lines().find(|l| l.starts_with("mean ")).unwrap();
    for key in ["psnr", "fscore", "baseline_psnr", "baseline_fscore"] {
        field(mean, key);
    }
}
