//! Text pages laid out in em units and rasterized at any pixel scale, so the
//! same page can be produced at two densities.

use crate::datasynth::glyphs::{Glyph, GlyphSet};
use crate::datasynth::image::BinaryImage;
use crate::error::{Error, Result};
use crate::numtensor::Rng;

/// Page geometry in em units (1 em = `scale` pixels).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageLayout {
    pub glyph_w: f64,
    pub glyph_h: f64,
    pub advance: f64,
    pub line_height: f64,
    pub margin: f64,
    pub stroke: f64,
}

impl Default for PageLayout {
    fn default() -> Self {
        PageLayout {
            glyph_w: 0.62,
            glyph_h: 0.81,
            advance: 0.83,
            line_height: 1.27,
            margin: 0.53,
            stroke: 0.15,
        }
    }
}

/// Smallest base scale (pixels per em) accepted for page rendering.
pub const MIN_PAGE_SCALE: usize = 8;

struct Placed<'a> {
    glyph: &'a Glyph,
    x: f64,
    y: f64,
}

/// Page extent `(height, width)` in em and the positioned glyphs.
fn layout<'a>(
    text: &str,
    set: &'a GlyphSet,
    lay: &PageLayout,
) -> Result<((f64, f64), Vec<Placed<'a>>)> {
    let lines: Vec<&str> = text.split('\n').collect();
    let cols = lines.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(1);
    let mut placed = Vec::new();
    for (row, line) in lines.iter().enumerate() {
        for (col, ch) in line.chars().enumerate() {
            if ch.is_whitespace() {
                continue;
            }
            let glyph = set
                .lookup(ch)
                .ok_or_else(|| Error::Input(format!("no glyph for character {ch:?}")))?;
            placed.push(Placed {
                glyph,
                x: lay.margin + col as f64 * lay.advance + (lay.advance - lay.glyph_w) / 2.0,
                y: lay.margin + row as f64 * lay.line_height + (lay.line_height - lay.glyph_h) / 2.0,
            });
        }
    }
    let w = 2.0 * lay.margin + cols as f64 * lay.advance;
    let h = 2.0 * lay.margin + lines.len() as f64 * lay.line_height;
    Ok(((h, w), placed))
}

/// Pixel dims of a page at `scale`.
fn page_pixels(extent: (f64, f64), scale: usize) -> (usize, usize) {
    let px = |e: f64| (e * scale as f64).ceil() as usize;
    (px(extent.0).max(1), px(extent.1).max(1))
}

fn raster(placed: &[Placed], lay: &PageLayout, h: usize, w: usize, scale: usize) -> Result<BinaryImage> {
    let s = scale as f64;
    let mut img = BinaryImage::blank(h, w)?;
    // The stroke width is isotropic in em; glyph boxes are anisotropic, so
    // distances are measured in em rather than box units.
    let half = lay.stroke / 2.0;
    for p in placed {
        let x0 = (((p.x - half) * s).floor().max(0.0)) as usize;
        let y0 = (((p.y - half) * s).floor().max(0.0)) as usize;
        let x1 = (((p.x + lay.glyph_w + half) * s).ceil() as usize).min(w);
        let y1 = (((p.y + lay.glyph_h + half) * s).ceil() as usize).min(h);
        for py in y0..y1 {
            let ey = (py as f64 + 0.5) / s - p.y;
            for px in x0..x1 {
                if img.get(py, px) == 1 {
                    continue;
                }
                let ex = (px as f64 + 0.5) / s - p.x;
                let hit = p.glyph.strokes.iter().any(|st| {
                    em_distance(st, ex, ey, lay.glyph_w, lay.glyph_h) <= half
                });
                if hit {
                    img.set(py, px, true);
                }
            }
        }
    }
    Ok(img)
}

/// Distance in em from `(ex, ey)` (em offsets from the glyph box corner) to
/// the stroke scaled to a `gw`×`gh` box.
fn em_distance(st: &crate::datasynth::glyphs::Stroke, ex: f64, ey: f64, gw: f64, gh: f64) -> f64 {
    use crate::datasynth::glyphs::Stroke;
    match *st {
        Stroke::Line { x0, y0, x1, y1 } => Stroke::Line {
            x0: x0 * gw,
            y0: y0 * gh,
            x1: x1 * gw,
            y1: y1 * gh,
        }
        .distance(ex, ey),
        Stroke::Arc { cx, cy, rad, a0, a1 } => {
            // Elliptic arcs are approximated by measuring in box units and
            // rescaling by the mean axis.
            let d = Stroke::Arc { cx, cy, rad, a0, a1 }.distance(ex / gw, ey / gh);
            d * (gw + gh) / 2.0
        }
    }
}

/// Rasterize `text` at `scale` pixels per em.
pub fn render_page(text: &str, set: &GlyphSet, lay: &PageLayout, scale: usize) -> Result<BinaryImage> {
    if scale == 0 {
        return Err(Error::Parameter("page scale must be positive".into()));
    }
    let (extent, placed) = layout(text, set, lay)?;
    let (h, w) = page_pixels(extent, scale);
    raster(&placed, lay, h, w, scale)
}

/// The same page rendered at `scale` (LR) and `r·scale` (HR). The HR dims
/// are exactly `r` times the LR dims.
pub fn render_page_pair(
    text: &str,
    set: &GlyphSet,
    lay: &PageLayout,
    scale: usize,
    r: usize,
) -> Result<(BinaryImage, BinaryImage)> {
    if scale < MIN_PAGE_SCALE {
        return Err(Error::Parameter(format!(
            "page scale {scale} is below the minimum of {MIN_PAGE_SCALE} px per em"
        )));
    }
    if r == 0 {
        return Err(Error::Parameter("scale factor must be positive".into()));
    }
    let (extent, placed) = layout(text, set, lay)?;
    let (h, w) = page_pixels(extent, scale);
    let lr = raster(&placed, lay, h, w, scale)?.with_density(75);
    let hr = raster(&placed, lay, h * r, w * r, scale * r)?.with_density(75 * r as u32);
    Ok((lr, hr))
}

/// Random lines of glyph labels separated by occasional spaces.
pub fn random_text(set: &GlyphSet, lines: usize, cols: usize, rng: &mut Rng) -> String {
    let labels = set.labels();
    let mut out = String::new();
    for row in 0..lines {
        if row > 0 {
            out.push('\n');
        }
        for _ in 0..cols {
            if rng.uniform() < 0.15 {
                out.push(' ');
            } else {
                out.push(labels[rng.below(labels.len() as u64) as usize]);
            }
        }
    }
    out
}
