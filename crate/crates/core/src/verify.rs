//! Self-verification suite: golden shape traces, the tconv size rule,
//! finite-difference gradient checks and oracle equivalences.

use crate::error::Result;
use crate::gradcheck;
use crate::layers::naive::{
    conv2d_backward_naive, conv2d_naive, subpixel_reference, tconv2d_backward_naive, tconv2d_naive,
    tconv2d_padded,
};
use crate::layers::{
    conv2d_backward, conv2d_forward, merge_add, merge_add_backward, prelu_backward, prelu_forward,
    subpixel_backward, subpixel_forward, tconv2d_backward, tconv2d_forward, ConvParams,
    PReluParams, SubpixelConfig,
};
use crate::models::tables::{expected_trace, golden_variants};
use crate::models::{build_model, INPUT_SIDE};
use crate::numtensor::{Dims, Rng, Tensor};
use crate::trainer::mse_loss;

/// Tolerance of the gradient checks.
pub const GRAD_TOL: f64 = 1e-5;
/// Tolerance of the fast-vs-naive and adjointness comparisons.
pub const ORACLE_TOL: f64 = 1e-10;
/// Random instances per gradient-checked operation.
pub const GRAD_TRIALS: usize = 40;
pub const TCONV_SIZES: std::ops::RangeInclusive<usize> = 4..=32;
pub const TCONV_KERNELS: [usize; 5] = [3, 5, 9, 17, 33];

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }

    fn from_result(name: &str, r: Result<Check>) -> Check {
        r.unwrap_or_else(|e| Check::new(name, false, format!("error: {e}")))
    }

    /// `name: PASS (detail)`.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("{}: {status} ({})", self.name, self.detail)
    }
}

/// Test hooks that deliberately break an implementation under check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Mutations {
    /// Drop the kernel flip from the transposed convolution checked for
    /// adjointness.
    pub tconv_no_flip: bool,
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

pub fn run_all(m: Mutations) -> Vec<Check> {
    let mut out = trace_checks();
    out.push(tconv_size_check());
    out.extend(gradient_checks(GRAD_TRIALS, 11));
    out.extend(oracle_checks(m, 12));
    out
}

/// One check per golden variant: the 16×16 shape trace equals the table.
pub fn trace_checks() -> Vec<Check> {
    golden_variants()
        .into_iter()
        .map(|meta| {
            let name = format!("trace/{meta}");
            Check::from_result(
                &name,
                (|| {
                    let want = expected_trace(meta).expect("golden variant has a table");
                    let got = build_model(meta, 0)?.shape_trace(INPUT_SIDE)?;
                    let mismatch = got.iter().zip(&want).position(|(a, b)| a != b);
                    Ok(match (got.len() == want.len(), mismatch) {
                        (true, None) => Check::new(&name, true, format!("{} rows", want.len())),
                        (false, _) => Check::new(
                            &name,
                            false,
                            format!("{} rows, expected {}", got.len(), want.len()),
                        ),
                        (true, Some(i)) => Check::new(
                            &name,
                            false,
                            format!("row {i}: {:?}, expected {:?}", got[i], want[i]),
                        ),
                    })
                })(),
            )
        })
        .collect()
}

/// Transposed-convolution output side is `i + k − 1` over the full grid.
pub fn tconv_size_check() -> Check {
    let name = "tconv_size_formula";
    Check::from_result(
        name,
        (|| {
            let mut rng = Rng::new(3);
            let mut cases = 0;
            for i in TCONV_SIZES {
                for k in TCONV_KERNELS {
                    let p = ConvParams::he_normal(k, 1, 1, &mut rng)?;
                    let x = Tensor::randn(Dims::new(1, i, i, 1)?, 1.0, &mut rng)?;
                    let d = tconv2d_forward(&x, &p)?.dims();
                    if (d.h, d.w) != (i + k - 1, i + k - 1) {
                        return Ok(Check::new(
                            name,
                            false,
                            format!("i={i} k={k}: {}×{}", d.h, d.w),
                        ));
                    }
                    cases += 1;
                }
            }
            Ok(Check::new(name, true, format!("{cases} cases")))
        })(),
    )
}

fn dims(n: usize, h: usize, w: usize, c: usize) -> Result<Dims> {
    Dims::new(n, h, w, c)
}

fn random_conv(k: usize, ci: usize, co: usize, rng: &mut Rng) -> Result<ConvParams> {
    let mut p = ConvParams::zeros(k, ci, co)?;
    p.kernel = Tensor::randn(p.kernel.dims(), 1.0, rng)?;
    p.bias = Tensor::randn(p.bias.dims(), 1.0, rng)?;
    Ok(p)
}

fn tensor_like(t: &Tensor, v: &[f64]) -> Result<Tensor> {
    Tensor::from_vec(t.dims(), v.to_vec())
}

/// Worst relative error of the analytic gradient of `⟨f(x), g⟩` over all
/// coordinates of `x`.
fn check_all<F>(x: &Tensor, analytic: &Tensor, mut f: F) -> Result<f64>
where
    F: FnMut(&Tensor) -> Result<f64>,
{
    let mut err = None;
    let idx: Vec<usize> = (0..x.len()).collect();
    let res = gradcheck::check(
        |v| match tensor_like(x, v).and_then(|t| f(&t)) {
            Ok(l) => l,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        x.values(),
        analytic.values(),
        &idx,
        gradcheck::DEFAULT_STEP,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(res.max_rel_err),
    }
}

/// Gradient checks for each operation over `trials` random instances.
pub fn gradient_checks(trials: usize, seed: u64) -> Vec<Check> {
    type Trial = fn(&mut Rng) -> Result<f64>;
    let ops: [(&str, Trial); 6] = [
        ("grad/conv", grad_conv),
        ("grad/tconv", grad_tconv),
        ("grad/prelu", grad_prelu),
        ("grad/merge", grad_merge),
        ("grad/subpixel", grad_subpixel),
        ("grad/mse", grad_mse),
    ];
    ops.iter()
        .enumerate()
        .map(|(i, &(name, trial))| {
            let mut rng = Rng::new(crate::numtensor::derive_seed(seed, i as u64));
            let mut worst: f64 = 0.0;
            for _ in 0..trials {
                match trial(&mut rng) {
                    Ok(e) if e.is_nan() => worst = f64::NAN,
                    Ok(e) => worst = worst.max(e),
                    Err(e) => return Check::new(name, false, format!("error: {e}")),
                }
            }
            Check::new(
                name,
                worst <= GRAD_TOL,
                format!("{trials} trials, max rel err {worst:.3e}"),
            )
        })
        .collect()
}

fn grad_conv(rng: &mut Rng) -> Result<f64> {
    let p = random_conv(3, 2, 3, rng)?;
    let x = Tensor::randn(dims(1, 6, 6, 2)?, 1.0, rng)?;
    let g = Tensor::randn(conv2d_forward(&x, &p)?.dims(), 1.0, rng)?;
    let grads = conv2d_backward(&x, &p, &g)?;
    let ex = check_all(&x, &grads.grad_x, |t| conv2d_forward(t, &p)?.dot(&g))?;
    let ek = check_all(&p.kernel, &grads.grad_kernel, |k| {
        conv2d_forward(&x, &ConvParams::from_parts(k.clone(), p.bias.clone())?)?.dot(&g)
    })?;
    let eb = check_all(&p.bias, &grads.grad_bias, |b| {
        conv2d_forward(&x, &ConvParams::from_parts(p.kernel.clone(), b.clone())?)?.dot(&g)
    })?;
    Ok(ex.max(ek).max(eb))
}

fn grad_tconv(rng: &mut Rng) -> Result<f64> {
    let p = random_conv(3, 2, 2, rng)?;
    let x = Tensor::randn(dims(1, 4, 4, 2)?, 1.0, rng)?;
    let g = Tensor::randn(tconv2d_forward(&x, &p)?.dims(), 1.0, rng)?;
    let grads = tconv2d_backward(&x, &p, &g)?;
    let ex = check_all(&x, &grads.grad_x, |t| tconv2d_forward(t, &p)?.dot(&g))?;
    let ek = check_all(&p.kernel, &grads.grad_kernel, |k| {
        tconv2d_forward(&x, &ConvParams::from_parts(k.clone(), p.bias.clone())?)?.dot(&g)
    })?;
    let eb = check_all(&p.bias, &grads.grad_bias, |b| {
        tconv2d_forward(&x, &ConvParams::from_parts(p.kernel.clone(), b.clone())?)?.dot(&g)
    })?;
    Ok(ex.max(ek).max(eb))
}

fn grad_prelu(rng: &mut Rng) -> Result<f64> {
    let c = 3;
    let mut x = Tensor::randn(dims(2, 4, 4, c)?, 1.0, rng)?;
    // Keep inputs away from the kink.
    for v in x.values_mut() {
        if v.abs() < 1e-3 {
            *v += 0.01;
        }
    }
    let mut a = PReluParams::new(c, 0.25)?;
    a.alpha = Tensor::randn(a.alpha.dims(), 0.5, rng)?;
    let g = Tensor::randn(x.dims(), 1.0, rng)?;
    let (gx, ga) = prelu_backward(&x, &a, &g)?;
    let ex = check_all(&x, &gx, |t| prelu_forward(t, &a)?.dot(&g))?;
    let ea = check_all(&a.alpha, &ga, |al| {
        prelu_forward(&x, &PReluParams { alpha: al.clone() })?.dot(&g)
    })?;
    Ok(ex.max(ea))
}

fn grad_merge(rng: &mut Rng) -> Result<f64> {
    let a = Tensor::randn(dims(1, 5, 5, 2)?, 1.0, rng)?;
    let b = Tensor::randn(a.dims(), 1.0, rng)?;
    let g = Tensor::randn(a.dims(), 1.0, rng)?;
    let (ga, gb) = merge_add_backward(&g);
    let ea = check_all(&a, &ga, |t| merge_add(t, &b)?.dot(&g))?;
    let eb = check_all(&b, &gb, |t| merge_add(&a, t)?.dot(&g))?;
    Ok(ea.max(eb))
}

fn grad_subpixel(rng: &mut Rng) -> Result<f64> {
    let cfg = SubpixelConfig::new(2)?;
    let x = Tensor::randn(dims(1, 3, 4, 8)?, 1.0, rng)?;
    let g = Tensor::randn(subpixel_forward(&x, cfg)?.dims(), 1.0, rng)?;
    let gx = subpixel_backward(&g, cfg)?;
    check_all(&x, &gx, |t| subpixel_forward(t, cfg)?.dot(&g))
}

fn grad_mse(rng: &mut Rng) -> Result<f64> {
    let pred = Tensor::randn(dims(2, 4, 4, 1)?, 1.0, rng)?;
    let gt = Tensor::randn(pred.dims(), 1.0, rng)?;
    let (_, g) = mse_loss(&pred, &gt)?;
    check_all(&pred, &g, |t| Ok(mse_loss(t, &gt)?.0))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Fast paths against loop oracles, adjointness, and the periodic shuffle.
pub fn oracle_checks(m: Mutations, seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    let mut rng = Rng::new(seed);
    out.push(Check::from_result("fast_vs_naive", fast_vs_naive(&mut rng)));
    out.push(Check::from_result("adjointness", adjointness(m, &mut rng)));
    out.push(Check::from_result("subpixel_reference", subpixel_exact(&mut rng)));
    out.push(Check::from_result("shuffle_bijection", shuffle_bijection(&mut rng)));
    out
}

fn fast_vs_naive(rng: &mut Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for (k, ci, co, h, w) in [(3, 2, 3, 7, 6), (5, 1, 4, 9, 9), (1, 3, 2, 4, 5), (9, 2, 2, 10, 12)] {
        let p = random_conv(k, ci, co, rng)?;
        let x = Tensor::randn(dims(2, h, w, ci)?, 1.0, rng)?;
        let y = conv2d_forward(&x, &p)?;
        worst = worst.max(y.max_abs_diff(&conv2d_naive(&x, &p)?)?);
        let g = Tensor::randn(y.dims(), 1.0, rng)?;
        let (a, b) = (conv2d_backward(&x, &p, &g)?, conv2d_backward_naive(&x, &p, &g)?);
        worst = worst
            .max(a.grad_x.max_abs_diff(&b.grad_x)?)
            .max(a.grad_kernel.max_abs_diff(&b.grad_kernel)?)
            .max(a.grad_bias.max_abs_diff(&b.grad_bias)?);

        let t = tconv2d_forward(&x, &p)?;
        worst = worst.max(t.max_abs_diff(&tconv2d_naive(&x, &p)?)?);
        let g = Tensor::randn(t.dims(), 1.0, rng)?;
        let (a, b) = (tconv2d_backward(&x, &p, &g)?, tconv2d_backward_naive(&x, &p, &g)?);
        worst = worst
            .max(a.grad_x.max_abs_diff(&b.grad_x)?)
            .max(a.grad_kernel.max_abs_diff(&b.grad_kernel)?)
            .max(a.grad_bias.max_abs_diff(&b.grad_bias)?);
        cases += 1;
    }
    Ok(Check::new(
        "fast_vs_naive",
        worst <= ORACLE_TOL,
        format!("{cases} shapes, max abs diff {worst:.3e}"),
    ))
}

/// `⟨T x, y⟩ = ⟨x, C y⟩` where `T` is the transposed convolution and `C`
/// the convolution with the channel-transposed kernel, both bias-free.
fn adjointness(m: Mutations, rng: &mut Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let trials = 10;
    for _ in 0..trials {
        let mut p = random_conv(3, 2, 3, rng)?;
        p.bias.values_mut().fill(0.0);
        let x = Tensor::randn(dims(1, 5, 4, 2)?, 1.0, rng)?;
        let tx = if m.tconv_no_flip {
            tconv2d_padded(&x, &p, false)?
        } else {
            tconv2d_forward(&x, &p)?
        };
        let y = Tensor::randn(tx.dims(), 1.0, rng)?;
        let lhs = tx.dot(&y)?;
        let rhs = x.dot(&conv2d_forward(&y, &p.channel_transposed())?)?;
        worst = worst.max(rel(lhs, rhs));
    }
    Ok(Check::new(
        "adjointness",
        worst <= ORACLE_TOL,
        format!("{trials} trials, max rel err {worst:.3e}"),
    ))
}

fn subpixel_exact(rng: &mut Rng) -> Result<Check> {
    let mut cases = 0;
    for (r, c_out, h, w) in [(2, 1, 4, 5), (4, 1, 3, 3), (2, 3, 2, 6), (3, 2, 3, 2)] {
        let cfg = SubpixelConfig::new(r)?;
        let x = Tensor::randn(dims(2, h, w, c_out * r * r)?, 1.0, rng)?;
        if subpixel_forward(&x, cfg)? != subpixel_reference(&x, cfg)? {
            return Ok(Check::new(
                "subpixel_reference",
                false,
                format!("r={r} c={c_out} {h}×{w} differs"),
            ));
        }
        cases += 1;
    }
    Ok(Check::new("subpixel_reference", true, format!("{cases} shapes, exact")))
}

fn shuffle_bijection(rng: &mut Rng) -> Result<Check> {
    let mut cases = 0;
    for (r, c) in [(2, 4), (4, 16), (2, 12), (3, 9)] {
        let cfg = SubpixelConfig::new(r)?;
        let x = Tensor::randn(dims(1, 5, 3, c)?, 1.0, rng)?;
        let y = subpixel_forward(&x, cfg)?;
        if subpixel_backward(&y, cfg)? != x || subpixel_forward(&subpixel_backward(&y, cfg)?, cfg)? != y {
            return Ok(Check::new(
                "shuffle_bijection",
                false,
                format!("r={r} c={c} round trip differs"),
            ));
        }
        cases += 1;
    }
    Ok(Check::new("shuffle_bijection", true, format!("{cases} shapes, exact")))
}
