use crate::error::Result;
use crate::image::ImageBuffer;
use crate::masking::{PatchGrid, PatchMask};

/// Patches whose mean sample value is at or below this are treated as dropped.
pub const DEFAULT_TAU: f64 = 12.0;

/// Recovers the patch mask from a decoded image: a patch counts as masked iff the mean of
/// all its samples (every channel) is at most `tau`. Genuinely dark content is
/// indistinguishable from a dropped patch and is reported as masked.
pub fn detect_mask(decoded: &ImageBuffer, grid: &PatchGrid, tau: f64) -> Result<PatchMask> {
    let ch = decoded.channels() as usize;
    let w = decoded.width() as usize;
    let mut bits = Vec::with_capacity(grid.len());
    for i in 0..grid.n_h() {
        for j in 0..grid.n_w() {
            let (x0, y0, x1, y1) = grid.patch_rect(i, j);
            let mut sum: u64 = 0;
            for y in y0 as usize..y1 as usize {
                let row = &decoded.data()[(y * w + x0 as usize) * ch..(y * w + x1 as usize) * ch];
                sum += row.iter().map(|&v| v as u64).sum::<u64>();
            }
            let n = ((x1 - x0) * (y1 - y0)) as u64 * ch as u64;
            bits.push(sum as f64 / n as f64 <= tau);
        }
    }
    PatchMask::from_bits(grid.n_h(), grid.n_w(), bits, None)
}
