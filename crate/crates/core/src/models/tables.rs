//! Published feature-map dimensions for a 16×16×1 input, kept as golden data
//! for shape-trace checks.

use crate::models::graph::{Activation, Arch, ModelMeta};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoldenRow {
    /// Row label as printed in the published table.
    pub label: &'static str,
    /// Node name in the built graph.
    pub node: &'static str,
    /// `(h, w, c)`.
    pub shape: [usize; 3],
}

const fn row(label: &'static str, node: &'static str, h: usize, w: usize, c: usize) -> GoldenRow {
    GoldenRow { label, node, shape: [h, w, c] }
}

const HEAD: [GoldenRow; 4] = [
    row("Input", "input", 16, 16, 1),
    row("conv1", "conv1", 12, 12, 48),
    row("conv2", "conv2", 8, 8, 16),
    row("trconv1", "trconv1", 16, 16, 16),
];

pub const CTC_X2: [GoldenRow; 5] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    HEAD[3],
    row("trconv2 (output)", "trconv2", 32, 32, 1),
];

pub const CTC_X4: [GoldenRow; 6] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    HEAD[3],
    row("trconv2", "trconv2", 32, 32, 8),
    row("trconv3(output)", "trconv3", 64, 64, 1),
];

pub const PSC_X2: [GoldenRow; 8] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    HEAD[3],
    row("trconv2", "trconv2", 32, 32, 1),
    row("conv3", "conv3", 16, 16, 1),
    row("trconv3", "trconv3", 32, 32, 1),
    row("Output (trconv2+trconv3)", "output", 32, 32, 1),
];

pub const PSC_X4: [GoldenRow; 10] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    HEAD[3],
    row("trconv2", "trconv2", 32, 32, 8),
    row("trconv4", "trconv4", 64, 64, 1),
    row("conv3", "conv3", 16, 16, 1),
    row("trconv3", "trconv3", 32, 32, 1),
    row("trconv5", "trconv5", 64, 64, 1),
    row("Output (trconv4+trconv5)", "output", 64, 64, 1),
];

pub const CTS_X2: [GoldenRow; 5] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    row("trconv1", "trconv1", 16, 16, 4),
    row("sub-pixel (output)", "subpixel", 32, 32, 1),
];

pub const CTS_X4: [GoldenRow; 6] = [
    HEAD[0],
    HEAD[1],
    HEAD[2],
    row("trconv1", "trconv1", 16, 16, 48),
    row("conv3", "conv3", 16, 16, 16),
    row("sub-pixel (output)", "subpixel", 64, 64, 1),
];

/// Single-stream table for `(arch, r)`; `None` for the multistream graph or
/// an unsupported factor.
pub fn stream_table(arch: Arch, r: usize) -> Option<&'static [GoldenRow]> {
    match (arch, r) {
        (Arch::Ctc, 2) => Some(&CTC_X2),
        (Arch::Ctc, 4) => Some(&CTC_X4),
        (Arch::Psc, 2) => Some(&PSC_X2),
        (Arch::Psc, 4) => Some(&PSC_X4),
        (Arch::Cts, 2) => Some(&CTS_X2),
        (Arch::Cts, 4) => Some(&CTS_X4),
        _ => None,
    }
}

/// Expected `(node name, shape)` trace. The multistream trace is the input,
/// then each stream's rows (without its input) under a `ctc/`, `psc/`, `cts/`
/// prefix, then the merged output at the single-stream output size.
pub fn expected_trace(meta: ModelMeta) -> Option<Vec<(String, [usize; 3])>> {
    let plain = |t: &[GoldenRow], prefix: &str| -> Vec<(String, [usize; 3])> {
        t.iter()
            .map(|g| (format!("{prefix}{}", g.node), g.shape))
            .collect()
    };
    match meta.arch {
        Arch::Multi => {
            let mut out = vec![("input".to_string(), [16, 16, 1])];
            for (arch, prefix) in [(Arch::Ctc, "ctc/"), (Arch::Psc, "psc/"), (Arch::Cts, "cts/")] {
                out.extend(plain(&stream_table(arch, meta.r)?[1..], prefix));
            }
            let side = 16 * meta.r;
            out.push(("output".to_string(), [side, side, 1]));
            Some(out)
        }
        arch => Some(plain(stream_table(arch, meta.r)?, "")),
    }
}

/// The 14 graphs with golden traces: 12 single-stream variants and the two
/// multistream scales (ReLU).
pub fn golden_variants() -> Vec<ModelMeta> {
    let mut v = crate::models::single_stream_variants();
    for r in crate::models::SCALES {
        v.push(ModelMeta { arch: Arch::Multi, r, act: Activation::Relu });
    }
    v
}
