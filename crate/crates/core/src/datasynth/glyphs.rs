//! A small vector glyph set drawn with line and arc strokes.
//!
//! Glyph coordinates live in a unit box: `x` grows to the right, `y`
//! downward. Arcs sweep counter-clockwise on screen from `a0` to `a1`
//! degrees, with 0° pointing right.

use crate::datasynth::image::BinaryImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stroke {
    Line { x0: f64, y0: f64, x1: f64, y1: f64 },
    Arc { cx: f64, cy: f64, rad: f64, a0: f64, a1: f64 },
}

impl Stroke {
    /// Euclidean distance from `(x, y)` to the stroke centre line.
    pub fn distance(&self, x: f64, y: f64) -> f64 {
        match *self {
            Stroke::Line { x0, y0, x1, y1 } => {
                let (dx, dy) = (x1 - x0, y1 - y0);
                let len2 = dx * dx + dy * dy;
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((x - x0) * dx + (y - y0) * dy) / len2).clamp(0.0, 1.0)
                };
                (x - x0 - t * dx).hypot(y - y0 - t * dy)
            }
            Stroke::Arc { cx, cy, rad, a0, a1 } => {
                let angle = (cy - y).atan2(x - cx).to_degrees();
                let sweep = a1 - a0;
                let rel = (angle - a0).rem_euclid(360.0);
                if sweep >= 360.0 || rel <= sweep {
                    ((x - cx).hypot(y - cy) - rad).abs()
                } else {
                    let end = |a: f64| {
                        let t = a.to_radians();
                        (x - cx - rad * t.cos()).hypot(y - cy + rad * t.sin())
                    };
                    end(a0).min(end(a1))
                }
            }
        }
    }

    /// Bounding box `(x_min, y_min, x_max, y_max)` of the centre line.
    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Stroke::Line { x0, y0, x1, y1 } => (x0.min(x1), y0.min(y1), x0.max(x1), y0.max(y1)),
            Stroke::Arc { cx, cy, rad, .. } => (cx - rad, cy - rad, cx + rad, cy + rad),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Glyph {
    pub label: char,
    pub strokes: Vec<Stroke>,
}

impl Glyph {
    /// Whether any stroke passes within `half_width` of `(x, y)` (unit-box
    /// coordinates).
    pub fn covers(&self, x: f64, y: f64, half_width: f64) -> bool {
        self.strokes.iter().any(|s| {
            let (x0, y0, x1, y1) = s.bounds();
            x >= x0 - half_width
                && x <= x1 + half_width
                && y >= y0 - half_width
                && y <= y1 + half_width
                && s.distance(x, y) <= half_width
        })
    }

    /// Rasterize into a `side`×`side` bitmap; the unit box spans the central
    /// `fill` fraction of the image and strokes are `stroke` box-units wide.
    pub fn render(&self, side: usize, fill: f64, stroke: f64) -> Result<BinaryImage> {
        let margin = (1.0 - fill) / 2.0;
        BinaryImage::from_fn(side, side, |py, px| {
            let u = ((px as f64 + 0.5) / side as f64 - margin) / fill;
            let v = ((py as f64 + 0.5) / side as f64 - margin) / fill;
            self.covers(u, v, stroke / 2.0)
        })
    }
}

fn line(x0: f64, y0: f64, x1: f64, y1: f64) -> Stroke {
    Stroke::Line { x0, y0, x1, y1 }
}

fn arc(cx: f64, cy: f64, rad: f64, a0: f64, a1: f64) -> Stroke {
    Stroke::Arc { cx, cy, rad, a0, a1 }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlyphSet {
    glyphs: Vec<Glyph>,
}

impl GlyphSet {
    pub fn new(glyphs: Vec<Glyph>) -> Result<Self> {
        if glyphs.is_empty() {
            return Err(Error::Input("empty glyph set".into()));
        }
        for (i, g) in glyphs.iter().enumerate() {
            if g.label.is_whitespace() {
                return Err(Error::Input(format!("glyph {i} uses a whitespace label")));
            }
            if glyphs[..i].iter().any(|o| o.label == g.label) {
                return Err(Error::Input(format!("duplicate glyph label {:?}", g.label)));
            }
        }
        Ok(GlyphSet { glyphs })
    }

    /// Built-in geometric letter and digit shapes.
    pub fn builtin() -> Self {
        let g = |label, strokes| Glyph { label, strokes };
        let glyphs = vec![
            g('A', vec![line(0.1, 1.0, 0.5, 0.0), line(0.5, 0.0, 0.9, 1.0), line(0.26, 0.62, 0.74, 0.62)]),
            g('C', vec![arc(0.55, 0.5, 0.42, 45.0, 315.0)]),
            g('D', vec![line(0.15, 0.0, 0.15, 1.0), line(0.15, 0.0, 0.45, 0.0), line(0.15, 1.0, 0.45, 1.0), arc(0.45, 0.5, 0.5, -90.0, 90.0)]),
            g('E', vec![line(0.15, 0.0, 0.15, 1.0), line(0.15, 0.0, 0.85, 0.0), line(0.15, 0.5, 0.7, 0.5), line(0.15, 1.0, 0.85, 1.0)]),
            g('F', vec![line(0.15, 0.0, 0.15, 1.0), line(0.15, 0.0, 0.85, 0.0), line(0.15, 0.5, 0.7, 0.5)]),
            g('H', vec![line(0.15, 0.0, 0.15, 1.0), line(0.85, 0.0, 0.85, 1.0), line(0.15, 0.5, 0.85, 0.5)]),
            g('I', vec![line(0.5, 0.0, 0.5, 1.0), line(0.25, 0.0, 0.75, 0.0), line(0.25, 1.0, 0.75, 1.0)]),
            g('J', vec![line(0.7, 0.0, 0.7, 0.7), arc(0.45, 0.7, 0.25, 180.0, 360.0)]),
            g('K', vec![line(0.15, 0.0, 0.15, 1.0), line(0.85, 0.0, 0.15, 0.55), line(0.4, 0.35, 0.85, 1.0)]),
            g('L', vec![line(0.15, 0.0, 0.15, 1.0), line(0.15, 1.0, 0.85, 1.0)]),
            g('M', vec![line(0.1, 1.0, 0.1, 0.0), line(0.1, 0.0, 0.5, 0.6), line(0.5, 0.6, 0.9, 0.0), line(0.9, 0.0, 0.9, 1.0)]),
            g('N', vec![line(0.15, 1.0, 0.15, 0.0), line(0.15, 0.0, 0.85, 1.0), line(0.85, 1.0, 0.85, 0.0)]),
            g('O', vec![arc(0.5, 0.5, 0.42, 0.0, 360.0)]),
            g('P', vec![line(0.15, 0.0, 0.15, 1.0), line(0.15, 0.0, 0.5, 0.0), line(0.15, 0.5, 0.5, 0.5), arc(0.5, 0.25, 0.25, -90.0, 90.0)]),
            g('S', vec![arc(0.5, 0.27, 0.25, 0.0, 270.0), arc(0.5, 0.73, 0.25, 180.0, 450.0)]),
            g('T', vec![line(0.1, 0.0, 0.9, 0.0), line(0.5, 0.0, 0.5, 1.0)]),
            g('U', vec![line(0.15, 0.0, 0.15, 0.65), line(0.85, 0.0, 0.85, 0.65), arc(0.5, 0.65, 0.35, 180.0, 360.0)]),
            g('V', vec![line(0.1, 0.0, 0.5, 1.0), line(0.5, 1.0, 0.9, 0.0)]),
            g('W', vec![line(0.05, 0.0, 0.28, 1.0), line(0.28, 1.0, 0.5, 0.4), line(0.5, 0.4, 0.72, 1.0), line(0.72, 1.0, 0.95, 0.0)]),
            g('X', vec![line(0.1, 0.0, 0.9, 1.0), line(0.9, 0.0, 0.1, 1.0)]),
            g('Y', vec![line(0.1, 0.0, 0.5, 0.5), line(0.9, 0.0, 0.5, 0.5), line(0.5, 0.5, 0.5, 1.0)]),
            g('Z', vec![line(0.1, 0.0, 0.9, 0.0), line(0.9, 0.0, 0.1, 1.0), line(0.1, 1.0, 0.9, 1.0)]),
            g('0', vec![arc(0.5, 0.5, 0.42, 0.0, 360.0), line(0.25, 0.8, 0.75, 0.2)]),
            g('1', vec![line(0.5, 0.0, 0.5, 1.0), line(0.5, 0.0, 0.25, 0.25), line(0.25, 1.0, 0.75, 1.0)]),
            g('2', vec![arc(0.5, 0.3, 0.3, -30.0, 180.0), line(0.76, 0.45, 0.15, 1.0), line(0.15, 1.0, 0.85, 1.0)]),
            g('3', vec![arc(0.5, 0.27, 0.25, -90.0, 180.0), arc(0.5, 0.73, 0.25, -180.0, 90.0)]),
            g('4', vec![line(0.65, 0.0, 0.1, 0.7), line(0.1, 0.7, 0.9, 0.7), line(0.65, 0.0, 0.65, 1.0)]),
            g('7', vec![line(0.1, 0.0, 0.9, 0.0), line(0.9, 0.0, 0.35, 1.0)]),
            g('+', vec![line(0.5, 0.15, 0.5, 0.85), line(0.15, 0.5, 0.85, 0.5)]),
            g('=', vec![line(0.15, 0.35, 0.85, 0.35), line(0.15, 0.65, 0.85, 0.65)]),
        ];
        GlyphSet { glyphs }
    }

    pub fn glyphs(&self) -> &[Glyph] {
        &self.glyphs
    }

    pub fn len(&self) -> usize {
        self.glyphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.glyphs.is_empty()
    }

    pub fn lookup(&self, label: char) -> Option<&Glyph> {
        self.glyphs.iter().find(|g| g.label == label)
    }

    pub fn labels(&self) -> Vec<char> {
        self.glyphs.iter().map(|g| g.label).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_distance() {
        let s = line(0.0, 0.0, 1.0, 0.0);
        assert!((s.distance(0.5, 0.3) - 0.3).abs() < 1e-15);
        assert!((s.distance(2.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((s.distance(-3.0, 4.0) - 5.0).abs() < 1e-15);
        let dot = line(0.2, 0.2, 0.2, 0.2);
        assert!((dot.distance(0.2, 0.5) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn arc_distance() {
        let full = arc(0.0, 0.0, 1.0, 0.0, 360.0);
        assert!((full.distance(0.0, 0.0) - 1.0).abs() < 1e-15);
        assert!((full.distance(2.0, 0.0) - 1.0).abs() < 1e-15);
        // Upper half on screen: y < 0.
        let top = arc(0.0, 0.0, 1.0, 0.0, 180.0);
        assert!(top.distance(0.0, -1.0) < 1e-12);
        assert!((top.distance(0.0, 1.0) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn builtin_set_is_valid_and_renders_ink() {
        let set = GlyphSet::builtin();
        assert!(GlyphSet::new(set.glyphs().to_vec()).is_ok());
        for g in set.glyphs() {
            let img = g.render(32, 0.8, 0.12).unwrap();
            let ratio = img.ink_ratio();
            assert!(ratio > 0.03 && ratio < 0.5, "{} {ratio}", g.label);
        }
    }

    #[test]
    fn invalid_sets() {
        assert!(matches!(GlyphSet::new(vec![]), Err(Error::Input(_))));
        let a = GlyphSet::builtin().glyphs()[0].clone();
        assert!(GlyphSet::new(vec![a.clone(), a]).is_err());
    }
}
