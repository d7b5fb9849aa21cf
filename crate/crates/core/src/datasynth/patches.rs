use std::fmt;
use std::path::Path;

use crate::binio::{ByteReader, ByteWriter};
use crate::datasynth::image::BinaryImage;
use crate::error::{Error, Result};

/// LR patch side used throughout.
pub const LR_SIDE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Provenance {
    Decimated,
    Masked,
    Glyph,
    Rendered,
}

impl Provenance {
    pub const ALL: [Provenance; 4] = [
        Provenance::Decimated,
        Provenance::Masked,
        Provenance::Glyph,
        Provenance::Rendered,
    ];

    pub fn id(self) -> u8 {
        match self {
            Provenance::Decimated => 0,
            Provenance::Masked => 1,
            Provenance::Glyph => 2,
            Provenance::Rendered => 3,
        }
    }

    pub fn from_id(id: u8) -> Option<Provenance> {
        Provenance::ALL.into_iter().find(|p| p.id() == id)
    }

    pub fn name(self) -> &'static str {
        match self {
            Provenance::Decimated => "decimated",
            Provenance::Masked => "masked",
            Provenance::Glyph => "glyph",
            Provenance::Rendered => "rendered",
        }
    }

    pub fn parse(s: &str) -> Option<Provenance> {
        Provenance::ALL.into_iter().find(|p| p.name() == s)
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchPair {
    pub lr: BinaryImage,
    pub hr: BinaryImage,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchPairSet {
    r: usize,
    pairs: Vec<PatchPair>,
}

impl PatchPairSet {
    pub fn new(r: usize) -> Result<Self> {
        if r == 0 || LR_SIDE * r > u16::MAX as usize || r > u8::MAX as usize {
            return Err(Error::Parameter(format!("invalid patch scale factor {r}")));
        }
        Ok(PatchPairSet { r, pairs: Vec::new() })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn lr_side(&self) -> usize {
        LR_SIDE
    }

    pub fn hr_side(&self) -> usize {
        LR_SIDE * self.r
    }

    pub fn pairs(&self) -> &[PatchPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn push(&mut self, pair: PatchPair) -> Result<()> {
        let (l, h) = (self.lr_side(), self.hr_side());
        if (pair.lr.h(), pair.lr.w()) != (l, l) || (pair.hr.h(), pair.hr.w()) != (h, h) {
            return Err(Error::Dimension(format!(
                "pair of {}×{} / {}×{} in a {l}/{h} set",
                pair.lr.h(),
                pair.lr.w(),
                pair.hr.h(),
                pair.hr.w()
            )));
        }
        self.pairs.push(pair);
        Ok(())
    }

    pub fn extend(&mut self, other: PatchPairSet) -> Result<()> {
        if other.r != self.r {
            return Err(Error::Config(format!("merging ×{} pairs into a ×{} set", other.r, self.r)));
        }
        self.pairs.extend(other.pairs);
        Ok(())
    }

    pub fn count(&self, p: Provenance) -> usize {
        self.pairs.iter().filter(|q| q.provenance == p).count()
    }

    /// Keep only pairs whose provenance is listed.
    pub fn filter(&self, keep: &[Provenance]) -> PatchPairSet {
        PatchPairSet {
            r: self.r,
            pairs: self
                .pairs
                .iter()
                .filter(|p| keep.contains(&p.provenance))
                .cloned()
                .collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> PatchPairSet {
        PatchPairSet {
            r: self.r,
            pairs: indices.iter().map(|&i| self.pairs[i].clone()).collect(),
        }
    }
}

/// All aligned windows: LR `16×16` at stride 1 paired with HR `16r×16r` at
/// stride `r`. Windows that would leave either image are dropped.
pub fn extract_patch_pairs(
    lr: &BinaryImage,
    hr: &BinaryImage,
    r: usize,
    provenance: Provenance,
) -> Result<PatchPairSet> {
    if r == 0 || hr.h() != r * lr.h() || hr.w() != r * lr.w() {
        return Err(Error::Dimension(format!(
            "HR {}×{} is not {r}× LR {}×{}",
            hr.h(),
            hr.w(),
            lr.h(),
            lr.w()
        )));
    }
    let mut set = PatchPairSet::new(r)?;
    if lr.h() < LR_SIDE || lr.w() < LR_SIDE {
        return Ok(set);
    }
    let side = LR_SIDE * r;
    for i in 0..=lr.h() - LR_SIDE {
        for j in 0..=lr.w() - LR_SIDE {
            set.pairs.push(PatchPair {
                lr: lr.crop(i, j, LR_SIDE, LR_SIDE)?,
                hr: hr.crop(r * i, r * j, side, side)?,
                provenance,
            });
        }
    }
    Ok(set)
}

pub const ARCHIVE_MAGIC: &[u8; 4] = b"BDPA";
pub const ARCHIVE_VERSION: u16 = 1;
pub const ARCHIVE_HEADER_LEN: usize = 16;

pub fn encode_archive(set: &PatchPairSet) -> Vec<u8> {
    let mut w = ByteWriter::default();
    let (l, h) = (set.lr_side(), set.hr_side());
    w.buf.reserve(ARCHIVE_HEADER_LEN + set.len() * (1 + l * l + h * h));
    w.bytes(ARCHIVE_MAGIC);
    w.u16(ARCHIVE_VERSION);
    w.u8(set.r as u8);
    w.u8(0);
    w.u32(set.len() as u32);
    w.u16(l as u16);
    w.u16(h as u16);
    for p in &set.pairs {
        w.u8(p.provenance.id());
        w.bytes(p.lr.bits());
        w.bytes(p.hr.bits());
    }
    w.buf
}

pub fn decode_archive(bytes: &[u8]) -> Result<PatchPairSet> {
    let mut rd = ByteReader::new(bytes, "BDPA archive");
    rd.expect_magic(ARCHIVE_MAGIC)?;
    let version = rd.u16()?;
    if version != ARCHIVE_VERSION {
        return Err(rd.format_err(format!("unsupported version {version}")));
    }
    let r = rd.u8()? as usize;
    let _reserved = rd.u8()?;
    let count = rd.u32()? as usize;
    let l = rd.u16()? as usize;
    let h = rd.u16()? as usize;
    let mut set = PatchPairSet::new(r).map_err(|e| rd.format_err(e))?;
    if l != set.lr_side() || h != set.hr_side() {
        return Err(rd.format_err(format!("patch sides {l}/{h} do not match factor {r}")));
    }
    let per_pair = 1 + l * l + h * h;
    if rd.remaining() != count.saturating_mul(per_pair) {
        return Err(rd.format_err(format!(
            "{count} pairs need {} bytes, found {}",
            count.saturating_mul(per_pair),
            rd.remaining()
        )));
    }
    set.pairs.reserve(count);
    for _ in 0..count {
        let id = rd.u8()?;
        let provenance =
            Provenance::from_id(id).ok_or_else(|| rd.format_err(format!("unknown provenance {id}")))?;
        let lr_bits = rd.take(l * l)?;
        let hr_bits = rd.take(h * h)?;
        if lr_bits.iter().chain(hr_bits).any(|&b| b > 1) {
            return Err(rd.format_err("pixel byte other than 0 or 1"));
        }
        set.pairs.push(PatchPair {
            lr: BinaryImage::from_bits(l, l, lr_bits.to_vec())?,
            hr: BinaryImage::from_bits(h, h, hr_bits.to_vec())?,
            provenance,
        });
    }
    Ok(set)
}

pub fn write_archive(set: &PatchPairSet, path: &Path) -> Result<()> {
    std::fs::write(path, encode_archive(set)).map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path) -> Result<PatchPairSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_archive(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasynth::image::decimate;
    use crate::numtensor::Rng;
    use proptest::prelude::*;

    fn random_image(h: usize, w: usize, seed: u64) -> BinaryImage {
        let mut rng = Rng::new(seed);
        BinaryImage::from_fn(h, w, |_, _| rng.uniform() < 0.3).unwrap()
    }

    #[test]
    fn window_counts() {
        let one = extract_patch_pairs(
            &random_image(16, 16, 1),
            &random_image(32, 32, 2),
            2,
            Provenance::Decimated,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        let four = extract_patch_pairs(
            &random_image(17, 17, 1),
            &random_image(34, 34, 2),
            2,
            Provenance::Decimated,
        )
        .unwrap();
        assert_eq!(four.len(), 4);
        let none = extract_patch_pairs(
            &random_image(15, 20, 1),
            &random_image(30, 40, 2),
            2,
            Provenance::Decimated,
        )
        .unwrap();
        assert!(none.is_empty());
        assert!(matches!(
            extract_patch_pairs(&random_image(16, 16, 1), &random_image(33, 32, 2), 2, Provenance::Glyph),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn decimated_pairs_are_aligned_exhaustively() {
        for r in [2, 4] {
            let hr = random_image(19 * r, 21 * r, r as u64);
            let lr = decimate(&hr, r).unwrap();
            let set = extract_patch_pairs(&lr, &hr, r, Provenance::Decimated).unwrap();
            assert_eq!(set.len(), 4 * 6);
            for p in set.pairs() {
                for y in 0..16 {
                    for x in 0..16 {
                        assert_eq!(p.hr.get(r * y, r * x), p.lr.get(y, x));
                    }
                }
            }
        }
    }

    #[test]
    fn empty_archive_is_header_only() {
        let set = PatchPairSet::new(2).unwrap();
        let bytes = encode_archive(&set);
        assert_eq!(bytes.len(), ARCHIVE_HEADER_LEN);
        assert_eq!(decode_archive(&bytes).unwrap(), set);
    }

    fn big_set(r: usize, n: usize) -> PatchPairSet {
        let mut set = PatchPairSet::new(r).unwrap();
        for i in 0..n {
            set.push(PatchPair {
                lr: random_image(16, 16, i as u64),
                hr: random_image(16 * r, 16 * r, 1000 + i as u64),
                provenance: Provenance::ALL[i % 4],
            })
            .unwrap();
        }
        set
    }

    #[test]
    fn thousand_pair_round_trip() {
        let set = big_set(2, 1000);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.bdpa");
        write_archive(&set, &path).unwrap();
        let back = read_archive(&path).unwrap();
        assert_eq!(back, set);
        assert_eq!(encode_archive(&back), std::fs::read(&path).unwrap());
    }

    #[test]
    fn corrupt_archives() {
        let set = big_set(4, 3);
        let bytes = encode_archive(&set);
        let mut bad = bytes.clone();
        bad[8] = 9; // pair count
        assert!(matches!(decode_archive(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[1] = b'X';
        assert!(matches!(decode_archive(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_archive(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_archive(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[ARCHIVE_HEADER_LEN] = 7;
        assert!(matches!(decode_archive(&bad), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[ARCHIVE_HEADER_LEN + 1] = 2;
        assert!(matches!(decode_archive(&bad), Err(Error::Format(_))));
    }

    #[test]
    fn push_checks_sides_and_filter() {
        let mut set = PatchPairSet::new(2).unwrap();
        let bad = PatchPair {
            lr: random_image(16, 16, 1),
            hr: random_image(64, 64, 1),
            provenance: Provenance::Glyph,
        };
        assert!(set.push(bad).is_err());
        let set = big_set(2, 8);
        let only = set.filter(&[Provenance::Masked]);
        assert_eq!(only.len(), 2);
        assert_eq!(only.count(Provenance::Masked), 2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn archive_round_trip(seed in any::<u64>(), n in 0usize..6, r in prop::sample::select(vec![2usize, 4])) {
            let mut rng = Rng::new(seed);
            let mut set = PatchPairSet::new(r).unwrap();
            for _ in 0..n {
                set.push(PatchPair {
                    lr: random_image(16, 16, rng.next_u64()),
                    hr: random_image(16 * r, 16 * r, rng.next_u64()),
                    provenance: Provenance::ALL[rng.below(4) as usize],
                }).unwrap();
            }
            let bytes = encode_archive(&set);
            let back = decode_archive(&bytes).unwrap();
            prop_assert_eq!(encode_archive(&back), bytes);
            prop_assert_eq!(back, set);
        }
    }
}
