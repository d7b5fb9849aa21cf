//! Synthetic LR–HR binary patch corpora: decimation, random masking,
//! rotated glyphs and two-density page rendering, plus the `BDPA` patch
//! archive and netpbm image I/O.

mod corpus;
mod glyphs;
mod image;
pub mod netpbm;
mod page;
mod patches;

pub use corpus::{build_corpus, heldout_pages, CorpusConfig};
pub use glyphs::{Glyph, GlyphSet, Stroke};
pub use image::{
    apply_mask, decimate, default_rotations, random_mask, render_glyph_set, rotate_nearest,
    BinaryImage, MaskParams,
};
pub use page::{random_text, render_page, render_page_pair, PageLayout, MIN_PAGE_SCALE};
pub use patches::{
    decode_archive, encode_archive, extract_patch_pairs, read_archive, write_archive, PatchPair,
    PatchPairSet, Provenance, ARCHIVE_HEADER_LEN, ARCHIVE_MAGIC, ARCHIVE_VERSION, LR_SIDE,
};
