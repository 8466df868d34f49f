//! Patch grids, dominant-class voting, and the two masking strategies.
//!
//! Semantic masking draws one Bernoulli sample per patch with the probability of the
//! patch's dominant group. Random masking selects exactly `floor(rho * n_h * n_w)` patches
//! uniformly without replacement. Both are seeded and reproducible.
//!
//! The per-patch draws come from ChaCha8 keyed by the seed: patch `k` (row-major) consumes
//! keystream words `2k` and `2k + 1`, so any patch can be drawn independently by seeking.

mod config;
mod rle;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::MaskConfig;
pub use rle::{mask_to_rle, rle_to_mask};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::segmap::SegMap;

pub const PATCH: u32 = 8;

/// Grid of 8x8 patches covering an image; the last row/column may be partial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatchGrid {
    width: u32,
    height: u32,
    n_h: u32,
    n_w: u32,
}

impl PatchGrid {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width < PATCH || height < PATCH {
            return Err(Error::Dimension(format!(
                "{width}x{height} is smaller than one {PATCH}x{PATCH} patch"
            )));
        }
        Ok(Self {
            width,
            height,
            n_h: height.div_ceil(PATCH),
            n_w: width.div_ceil(PATCH),
        })
    }

    pub fn for_image(img: &ImageBuffer) -> Result<Self> {
        Self::new(img.width(), img.height())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn n_h(&self) -> u32 {
        self.n_h
    }

    pub fn n_w(&self) -> u32 {
        self.n_w
    }

    pub fn len(&self) -> usize {
        self.n_h as usize * self.n_w as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Pixel bounds `(x0, y0, x1, y1)` (exclusive end) of patch `(i, j)`, clipped to the
    /// image.
    pub fn patch_rect(&self, i: u32, j: u32) -> (u32, u32, u32, u32) {
        let x0 = j * PATCH;
        let y0 = i * PATCH;
        (
            x0,
            y0,
            (x0 + PATCH).min(self.width),
            (y0 + PATCH).min(self.height),
        )
    }
}

/// Binary patch grid; `true` marks a dropped patch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchMask {
    n_h: u32,
    n_w: u32,
    bits: Vec<bool>,
    seed: Option<u64>,
}

impl PatchMask {
    pub fn from_bits(n_h: u32, n_w: u32, bits: Vec<bool>, seed: Option<u64>) -> Result<Self> {
        if bits.len() != n_h as usize * n_w as usize {
            return Err(Error::Dimension(format!(
                "{} bits for a {n_h}x{n_w} grid",
                bits.len()
            )));
        }
        Ok(Self {
            n_h,
            n_w,
            bits,
            seed,
        })
    }

    pub fn empty(grid: &PatchGrid) -> Self {
        Self::filled(grid, false)
    }

    pub fn filled(grid: &PatchGrid, value: bool) -> Self {
        Self {
            n_h: grid.n_h,
            n_w: grid.n_w,
            bits: vec![value; grid.len()],
            seed: None,
        }
    }

    pub fn n_h(&self) -> u32 {
        self.n_h
    }

    pub fn n_w(&self) -> u32 {
        self.n_w
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn is_masked(&self, i: u32, j: u32) -> bool {
        self.bits[(i * self.n_w + j) as usize]
    }

    pub fn set(&mut self, i: u32, j: u32, masked: bool) {
        self.bits[(i * self.n_w + j) as usize] = masked;
    }

    pub fn masked_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn masked_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.masked_count() as f64 / self.bits.len() as f64
        }
    }

    pub fn matches(&self, grid: &PatchGrid) -> bool {
        self.n_h == grid.n_h && self.n_w == grid.n_w
    }

    /// Per-pixel expansion (row-major, `true` = masked) over the grid's image.
    pub fn pixel_mask(&self, grid: &PatchGrid) -> Vec<bool> {
        let (w, h) = (grid.width as usize, grid.height as usize);
        let mut out = vec![false; w * h];
        for y in 0..h {
            let i = y as u32 / PATCH;
            for x in 0..w {
                out[y * w + x] = self.is_masked(i, x as u32 / PATCH);
            }
        }
        out
    }

    /// Visualization: one 8-bit pixel per patch, 255 where masked.
    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::new(
            self.n_w,
            self.n_h,
            1,
            self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        )
        .expect("grid dims are nonzero")
    }
}

/// Class with the most pixels in patch `(i, j)`; ties go to the smallest class id.
pub fn dominant_class(segmap: &SegMap, grid: &PatchGrid, i: u32, j: u32) -> u8 {
    let (x0, y0, x1, y1) = grid.patch_rect(i, j);
    let mut counts = [0u16; 256];
    for y in y0..y1 {
        for x in x0..x1 {
            counts[segmap.label(x, y) as usize] += 1;
        }
    }
    let mut best = 0usize;
    for (class, &n) in counts.iter().enumerate() {
        if n > counts[best] {
            best = class;
        }
    }
    best as u8
}

fn check_cover(segmap: &SegMap, grid: &PatchGrid) -> Result<()> {
    if segmap.width() < grid.width() || segmap.height() < grid.height() {
        return Err(Error::Dimension(format!(
            "segmap {}x{} does not cover the {}x{} grid image",
            segmap.width(),
            segmap.height(),
            grid.width(),
            grid.height()
        )));
    }
    Ok(())
}

#[inline]
fn unit_from_u64(v: u64) -> f64 {
    (v >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[0, 1)` assigned to patch `index` under `seed`.
pub fn patch_uniform(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * index as u128);
    unit_from_u64(rng.next_u64())
}

/// Per-patch Bernoulli masking with the dominant group's probability.
pub fn semantic_mask(
    segmap: &SegMap,
    config: &MaskConfig,
    grid: &PatchGrid,
    seed: u64,
) -> Result<PatchMask> {
    check_cover(segmap, grid)?;
    let tax = segmap.taxonomy();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = Vec::with_capacity(grid.len());
    for i in 0..grid.n_h {
        for j in 0..grid.n_w {
            let u = unit_from_u64(rng.next_u64());
            let rho = config.rho(tax.group_of(dominant_class(segmap, grid, i, j)));
            bits.push(u < rho);
        }
    }
    PatchMask::from_bits(grid.n_h, grid.n_w, bits, Some(seed))
}

/// Masks exactly `floor(rho * n_h * n_w)` patches chosen uniformly without replacement.
pub fn random_mask(grid: &PatchGrid, rho: f64, seed: u64) -> Result<PatchMask> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Config(format!("masking ratio {rho} outside [0, 1]")));
    }
    let n = grid.len();
    // tolerate decimal ratios whose binary product lands just under an integer
    let k = ((rho * n as f64) + 1e-9).floor() as usize;
    let k = k.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits = vec![false; n];
    for idx in rand::seq::index::sample(&mut rng, n, k) {
        bits[idx] = true;
    }
    PatchMask::from_bits(grid.n_h, grid.n_w, bits, Some(seed))
}

/// Zeroes every masked patch in all channels; other bytes are copied untouched.
pub fn apply_mask(img: &ImageBuffer, mask: &PatchMask) -> Result<ImageBuffer> {
    let grid = PatchGrid::for_image(img)?;
    if !mask.matches(&grid) {
        return Err(Error::Dimension(format!(
            "{}x{} mask does not match the {}x{} patch grid",
            mask.n_h, mask.n_w, grid.n_h, grid.n_w
        )));
    }
    let mut out = img.clone();
    let ch = img.channels() as usize;
    let w = img.width() as usize;
    for i in 0..grid.n_h {
        for j in 0..grid.n_w {
            if !mask.is_masked(i, j) {
                continue;
            }
            let (x0, y0, x1, y1) = grid.patch_rect(i, j);
            let data = out.data_mut();
            for y in y0 as usize..y1 as usize {
                data[(y * w + x0 as usize) * ch..(y * w + x1 as usize) * ch].fill(0);
            }
        }
    }
    Ok(out)
}
