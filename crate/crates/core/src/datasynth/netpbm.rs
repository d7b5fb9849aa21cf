//! Binary netpbm: PBM (`P4`, 1 = black = ink) and 8-bit PGM (`P5`).

use std::path::Path;

use crate::datasynth::image::BinaryImage;
use crate::error::{Error, Result};

/// 8-bit grayscale raster as stored in PGM.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayBytes {
    pub h: usize,
    pub w: usize,
    pub data: Vec<u8>,
}

pub fn encode_pbm(img: &BinaryImage) -> Vec<u8> {
    let row_bytes = img.w().div_ceil(8);
    let mut out = format!("P4\n{} {}\n", img.w(), img.h()).into_bytes();
    out.reserve(row_bytes * img.h());
    for y in 0..img.h() {
        let mut row = vec![0u8; row_bytes];
        for x in 0..img.w() {
            if img.get(y, x) == 1 {
                row[x / 8] |= 0x80 >> (x % 8);
            }
        }
        out.extend_from_slice(&row);
    }
    out
}

pub fn decode_pbm(bytes: &[u8]) -> Result<BinaryImage> {
    let mut p = HeaderParser::new(bytes, "PBM");
    p.magic(b"P4")?;
    let w = p.number()?;
    let h = p.number()?;
    let start = p.end_of_header()?;
    let row_bytes = w.div_ceil(8);
    let need = row_bytes
        .checked_mul(h)
        .ok_or_else(|| Error::Format("PBM: dims overflow".into()))?;
    let raster = &bytes[start..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "PBM: raster has {} bytes, {need} needed",
            raster.len()
        )));
    }
    BinaryImage::from_fn(h, w, |y, x| raster[y * row_bytes + x / 8] & (0x80 >> (x % 8)) != 0)
        .map_err(|e| Error::Format(format!("PBM: {e}")))
}

pub fn encode_pgm(img: &GrayBytes) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.w, img.h).into_bytes();
    out.extend_from_slice(&img.data);
    out
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayBytes> {
    let mut p = HeaderParser::new(bytes, "PGM");
    p.magic(b"P5")?;
    let w = p.number()?;
    let h = p.number()?;
    let maxval = p.number()?;
    if maxval != 255 {
        return Err(Error::Format(format!("PGM: maxval {maxval} unsupported (need 255)")));
    }
    let start = p.end_of_header()?;
    let need = w
        .checked_mul(h)
        .ok_or_else(|| Error::Format("PGM: dims overflow".into()))?;
    if w == 0 || h == 0 {
        return Err(Error::Format(format!("PGM: empty image {w}×{h}")));
    }
    let raster = &bytes[start..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "PGM: raster has {} bytes, {need} needed",
            raster.len()
        )));
    }
    Ok(GrayBytes {
        h,
        w,
        data: raster[..need].to_vec(),
    })
}

pub fn read_pbm(path: &Path) -> Result<BinaryImage> {
    decode_pbm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_pbm(img: &BinaryImage, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pbm(img)).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: &Path) -> Result<GrayBytes> {
    decode_pgm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_pgm(img: &GrayBytes, path: &Path) -> Result<()> {
    std::fs::write(path, encode_pgm(img)).map_err(|e| Error::io(path, e))
}

struct HeaderParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> HeaderParser<'a> {
    fn new(bytes: &'a [u8], what: &'static str) -> Self {
        HeaderParser { bytes, pos: 0, what }
    }

    fn err(&self, msg: &str) -> Error {
        Error::Format(format!("{}: {msg} at byte {}", self.what, self.pos))
    }

    fn magic(&mut self, m: &[u8; 2]) -> Result<()> {
        if self.bytes.len() < 2 || &self.bytes[..2] != m {
            return Err(self.err(&format!("expected magic {}", String::from_utf8_lossy(m))));
        }
        self.pos = 2;
        Ok(())
    }

    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a number"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err("number out of range"))
    }

    /// Consume the single whitespace byte that ends the header.
    fn end_of_header(&mut self) -> Result<usize> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(self.err("missing whitespace after header")),
        }
    }
}
