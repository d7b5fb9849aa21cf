//! `bdsr`: corpus synthesis, training, upscaling, evaluation and
//! self-verification for binary document super-resolution.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bdsr_core::{Error, Result};
use config::Settings;

#[derive(Parser, Debug)]
#[command(name = "bdsr", version, about = "Binary document image super-resolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key = value configuration file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<String>,
}

#[derive(Args, Debug)]
struct ModelFlags {
    /// ctc, psc, cts or multi
    #[arg(long)]
    arch: Option<String>,
    /// 2 or 4
    #[arg(long)]
    r: Option<String>,
    /// relu or prelu
    #[arg(long)]
    act: Option<String>,
}

#[derive(Args, Debug)]
struct InferFlags {
    /// LR pixels between tile origins (1..=16)
    #[arg(long)]
    stride: Option<String>,
    /// Power-law exponent applied before binarization
    #[arg(long)]
    gamma: Option<String>,
    /// Binarize the raw output (same as --gamma 1)
    #[arg(long)]
    no_gamma: bool,
    #[arg(long)]
    threshold: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build an LR–HR patch archive
    Synth {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        r: Option<String>,
        /// Comma-separated subset of decimated, masked, glyph, rendered
        #[arg(long)]
        classes: Option<String>,
        #[arg(long)]
        pages: Option<String>,
        /// LR pixels per em
        #[arg(long)]
        page_scale: Option<String>,
        /// Cap per class (0 = no cap)
        #[arg(long)]
        max_pairs: Option<String>,
        /// Archive to write
        #[arg(long)]
        out: Option<String>,
    },
    /// Train a model on an archive
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        archive: Option<String>,
        /// Checkpoint to write
        #[arg(long)]
        checkpoint: Option<String>,
        /// Loss log (appended)
        #[arg(long)]
        log: Option<String>,
        /// Continue from this checkpoint
        #[arg(long)]
        resume: Option<String>,
        #[arg(long)]
        batch_size: Option<String>,
        #[arg(long)]
        epochs: Option<String>,
        #[arg(long)]
        max_steps: Option<String>,
        #[arg(long)]
        lr: Option<String>,
        #[arg(long)]
        checkpoint_every: Option<String>,
    },
    /// Super-resolve a PBM page
    Upscale {
        #[command(flatten)]
        common: Common,
        /// Model or training checkpoint
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        r: Option<String>,
        /// LR page (PBM)
        #[arg(long)]
        input: Option<String>,
        /// Binarized output (PBM)
        #[arg(long)]
        out: Option<String>,
        /// Gray output (PGM)
        #[arg(long)]
        gray_out: Option<String>,
        /// Ground-truth HR page (PBM) for metrics
        #[arg(long)]
        gt: Option<String>,
        /// Score every gamma in 0.1..=1.0 against --gt
        #[arg(long)]
        gamma_sweep: bool,
        #[command(flatten)]
        infer: InferFlags,
    },
    /// Score a model on an archive or on held-out synthetic pages
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        r: Option<String>,
        /// Report the mean loss over this archive
        #[arg(long)]
        archive: Option<String>,
        /// Number of held-out pages compared with the nearest-neighbour
        /// baseline (0 = none)
        #[arg(long)]
        heldout: Option<String>,
        #[arg(long)]
        page_scale: Option<String>,
        #[command(flatten)]
        infer: InferFlags,
    },
    /// Run the built-in verification suite
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        mutate_tconv_flip: bool,
    },
}

/// `(key, flag, value)` triples for every flag given.
struct Pairs(Vec<(&'static str, &'static str, String)>);

impl Pairs {
    fn opt(&mut self, key: &'static str, flag: &'static str, v: &Option<String>) {
        if let Some(v) = v {
            self.0.push((key, flag, v.clone()));
        }
    }

    fn switch(&mut self, key: &'static str, flag: &'static str, on: bool) {
        if on {
            self.0.push((key, flag, "true".into()));
        }
    }

    fn common(&mut self, c: &Common) {
        self.opt("seed", "--seed", &c.seed);
        self.opt("threads", "--threads", &c.threads);
    }

    fn model(&mut self, m: &ModelFlags) {
        self.opt("arch", "--arch", &m.arch);
        self.opt("r", "--r", &m.r);
        self.opt("act", "--act", &m.act);
    }

    fn infer(&mut self, f: &InferFlags) {
        self.opt("stride", "--stride", &f.stride);
        self.opt("gamma", "--gamma", &f.gamma);
        self.switch("no_gamma", "--no-gamma", f.no_gamma);
        self.opt("threshold", "--threshold", &f.threshold);
    }
}

fn settings(common: &Common, pairs: Pairs) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &common.config {
        s.apply_file(path)?;
    }
    let mut p = Pairs(Vec::new());
    p.common(common);
    for (key, flag, value) in p.0.into_iter().chain(pairs.0) {
        s.apply(key, &value, flag)?;
    }
    if let Some(n) = s.threads {
        // Only fails if a global pool already exists, which cannot happen
        // before the first parallel call.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<bool> {
    let mut p = Pairs(Vec::new());
    match &cli.command {
        Command::Synth {
            common,
            r,
            classes,
            pages,
            page_scale,
            max_pairs,
            out,
        } => {
            p.opt("r", "--r", r);
            p.opt("classes", "--classes", classes);
            p.opt("pages", "--pages", pages);
            p.opt("page_scale", "--page-scale", page_scale);
            p.opt("max_pairs", "--max-pairs", max_pairs);
            p.opt("output", "--out", out);
            commands::synth(&settings(common, p)?)?;
        }
        Command::Train {
            common,
            model,
            archive,
            checkpoint,
            log,
            resume,
            batch_size,
            epochs,
            max_steps,
            lr,
            checkpoint_every,
        } => {
            p.model(model);
            p.opt("archive", "--archive", archive);
            p.opt("checkpoint", "--checkpoint", checkpoint);
            p.opt("log", "--log", log);
            p.opt("resume", "--resume", resume);
            p.opt("batch_size", "--batch-size", batch_size);
            p.opt("epochs", "--epochs", epochs);
            p.opt("max_steps", "--max-steps", max_steps);
            p.opt("lr", "--lr", lr);
            p.opt("checkpoint_every", "--checkpoint-every", checkpoint_every);
            commands::train(&settings(common, p)?)?;
        }
        Command::Upscale {
            common,
            model,
            r,
            input,
            out,
            gray_out,
            gt,
            gamma_sweep,
            infer,
        } => {
            p.opt("model", "--model", model);
            p.opt("r", "--r", r);
            p.opt("input", "--input", input);
            p.opt("output", "--out", out);
            p.opt("gray_output", "--gray-out", gray_out);
            p.opt("gt", "--gt", gt);
            p.switch("gamma_sweep", "--gamma-sweep", *gamma_sweep);
            p.infer(infer);
            commands::upscale(&settings(common, p)?)?;
        }
        Command::Eval {
            common,
            model,
            r,
            archive,
            heldout,
            page_scale,
            infer,
        } => {
            p.opt("model", "--model", model);
            p.opt("r", "--r", r);
            p.opt("archive", "--archive", archive);
            p.opt("heldout", "--heldout", heldout);
            p.opt("page_scale", "--page-scale", page_scale);
            p.infer(infer);
            commands::eval(&settings(common, p)?)?;
        }
        Command::Verify {
            common,
            mutate_tconv_flip,
        } => {
            let s = settings(common, p)?;
            return Ok(commands::verify(&s, *mutate_tconv_flip));
        }
    }
    Ok(true)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io { .. } => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
