//! Harmonic hole filling: masked pixels solve the discrete Laplace equation with the
//! unmasked pixels as Dirichlet boundary.
//!
//! The solver is red-black Gauss-Seidel over the masked pixels only, started from a
//! push-pull (pyramid) fill so large holes begin close to the solution. Neighbors outside
//! the image are skipped, i.e. the image border acts as a reflecting boundary.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::masking::{PatchGrid, PatchMask};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InpaintParams {
    pub max_iter: usize,
    /// Stop once the largest per-sample update of a sweep is below this many levels.
    /// A sweep contracts the error by about 0.88 on an 8x8 hole, so the remaining error can
    /// be several times `tol`; 0.05 keeps it under half a level there.
    pub tol: f64,
}

impl Default for InpaintParams {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol: 0.05,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicSolution {
    /// Interleaved samples, same layout as the input.
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub last_update: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inpainted {
    pub image: ImageBuffer,
    pub iterations: usize,
    /// `false` when `max_iter` was reached first; the image is still usable.
    pub converged: bool,
}

/// Fills the masked patches of `decoded`. Unmasked bytes are copied through unchanged.
pub fn inpaint_harmonic(
    decoded: &ImageBuffer,
    mask: &PatchMask,
    params: InpaintParams,
) -> Result<Inpainted> {
    let grid = PatchGrid::for_image(decoded)?;
    if !mask.matches(&grid) {
        return Err(Error::Dimension(format!(
            "{}x{} mask does not match the {}x{} patch grid",
            mask.n_h(),
            mask.n_w(),
            grid.n_h(),
            grid.n_w()
        )));
    }
    let masked = mask.pixel_mask(&grid);
    let values: Vec<f64> = decoded.data().iter().map(|&v| v as f64).collect();
    let sol = harmonic_solve(
        &values,
        decoded.width() as usize,
        decoded.height() as usize,
        decoded.channels() as usize,
        &masked,
        params,
    );
    if !sol.converged {
        log::warn!(
            "harmonic inpainting stopped at max_iter={} with last update {:.3}",
            params.max_iter,
            sol.last_update
        );
    }
    let mut out = decoded.clone();
    let ch = decoded.channels() as usize;
    for (p, &m) in masked.iter().enumerate() {
        if m {
            for c in 0..ch {
                out.data_mut()[p * ch + c] = sol.values[p * ch + c].round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(Inpainted {
        image: out,
        iterations: sol.iterations,
        converged: sol.converged,
    })
}

/// Solves the Laplace equation on the pixels flagged in `masked` (one flag per pixel,
/// shared by all channels). Unflagged samples are returned unchanged.
pub fn harmonic_solve(
    values: &[f64],
    width: usize,
    height: usize,
    channels: usize,
    masked: &[bool],
    params: InpaintParams,
) -> HarmonicSolution {
    assert_eq!(values.len(), width * height * channels);
    assert_eq!(masked.len(), width * height);
    let mut v = values.to_vec();
    let has_boundary = masked.iter().any(|&m| !m);
    if !has_boundary || !masked.iter().any(|&m| m) {
        return HarmonicSolution {
            values: v,
            iterations: 0,
            converged: true,
            last_update: 0.0,
        };
    }
    push_pull_fill(&mut v, width, height, channels, masked);

    // Per color: pixel index, then the in-image 4-neighbors.
    let mut colors: [Vec<(u32, [u32; 4], u8)>; 2] = [Vec::new(), Vec::new()];
    for y in 0..height {
        for x in 0..width {
            let p = y * width + x;
            if !masked[p] {
                continue;
            }
            let mut nb = [0u32; 4];
            let mut n = 0u8;
            let mut add = |q: usize| {
                nb[n as usize] = q as u32;
                n += 1;
            };
            if x > 0 {
                add(p - 1);
            }
            if x + 1 < width {
                add(p + 1);
            }
            if y > 0 {
                add(p - width);
            }
            if y + 1 < height {
                add(p + width);
            }
            colors[(x + y) % 2].push((p as u32, nb, n));
        }
    }

    let mut iterations = 0;
    let mut last_update = f64::INFINITY;
    while iterations < params.max_iter {
        iterations += 1;
        let mut max_update: f64 = 0.0;
        for list in &colors {
            for &(p, nb, n) in list {
                let base = p as usize * channels;
                for c in 0..channels {
                    let mut sum = 0.0;
                    for &q in &nb[..n as usize] {
                        sum += v[q as usize * channels + c];
                    }
                    let new = sum / n as f64;
                    max_update = max_update.max((new - v[base + c]).abs());
                    v[base + c] = new;
                }
            }
        }
        last_update = max_update;
        if max_update < params.tol {
            return HarmonicSolution {
                values: v,
                iterations,
                converged: true,
                last_update,
            };
        }
    }
    HarmonicSolution {
        values: v,
        iterations,
        converged: false,
        last_update,
    }
}

/// Initial guess: known samples are averaged up a 2x pyramid, then holes take the value of
/// the first ancestor that has support.
fn push_pull_fill(v: &mut [f64], width: usize, height: usize, ch: usize, masked: &[bool]) {
    struct Level {
        w: usize,
        h: usize,
        sum: Vec<f64>,
        weight: Vec<f64>,
    }
    let mut levels = vec![Level {
        w: width,
        h: height,
        sum: (0..width * height * ch)
            .map(|i| if masked[i / ch] { 0.0 } else { v[i] })
            .collect(),
        weight: masked.iter().map(|&m| if m { 0.0 } else { 1.0 }).collect(),
    }];
    while levels.last().map(|l| l.w > 1 || l.h > 1).unwrap_or(false) {
        let prev = levels.last().expect("nonempty");
        let (w, h) = (prev.w.div_ceil(2), prev.h.div_ceil(2));
        let mut sum = vec![0.0; w * h * ch];
        let mut weight = vec![0.0; w * h];
        for y in 0..prev.h {
            for x in 0..prev.w {
                let (p, q) = (y * prev.w + x, (y / 2) * w + x / 2);
                weight[q] += prev.weight[p];
                for c in 0..ch {
                    sum[q * ch + c] += prev.sum[p * ch + c];
                }
            }
        }
        levels.push(Level { w, h, sum, weight });
    }
    // normalized mean per level, filled top-down from the parent where empty
    let mut upper: Option<(usize, Vec<f64>)> = None;
    for level in levels.iter().rev() {
        let mut mean = vec![0.0; level.w * level.h * ch];
        for y in 0..level.h {
            for x in 0..level.w {
                let p = y * level.w + x;
                for c in 0..ch {
                    mean[p * ch + c] = if level.weight[p] > 0.0 {
                        level.sum[p * ch + c] / level.weight[p]
                    } else if let Some((uw, ref up)) = upper {
                        up[((y / 2) * uw + x / 2) * ch + c]
                    } else {
                        0.0
                    };
                }
            }
        }
        upper = Some((level.w, mean));
    }
    let (_, finest) = upper.expect("at least one level");
    for (p, &m) in masked.iter().enumerate() {
        if m {
            v[p * ch..(p + 1) * ch].copy_from_slice(&finest[p * ch..(p + 1) * ch]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::random_mask;

    #[test]
    fn constant_image_is_reproduced() {
        let img = ImageBuffer::filled(40, 32, 3, 93);
        let grid = PatchGrid::for_image(&img).unwrap();
        let mask = random_mask(&grid, 0.6, 4).unwrap();
        let out = inpaint_harmonic(&img, &mask, InpaintParams::default()).unwrap();
        assert!(out.converged);
        assert_eq!(out.image, img);
    }

    #[test]
    fn linear_ramp_is_reproduced() {
        let img = ImageBuffer::from_fn(64, 32, 1, |x, _, _| (x * 4) as u8);
        let grid = PatchGrid::for_image(&img).unwrap();
        let mut mask = PatchMask::empty(&grid);
        mask.set(1, 2, true);
        mask.set(1, 3, true);
        mask.set(2, 3, true);
        mask.set(2, 5, true);
        let out = inpaint_harmonic(
            &img,
            &mask,
            InpaintParams {
                max_iter: 20_000,
                tol: 1e-6,
            },
        )
        .unwrap();
        assert!(out.converged);
        assert_eq!(out.image, img);
    }

    #[test]
    fn fully_masked_image_has_no_boundary() {
        let img = ImageBuffer::filled(16, 16, 1, 0);
        let grid = PatchGrid::for_image(&img).unwrap();
        let out = inpaint_harmonic(
            &img,
            &PatchMask::filled(&grid, true),
            InpaintParams::default(),
        )
        .unwrap();
        assert_eq!(out.image, img);
    }

    #[test]
    fn max_iter_reports_non_convergence() {
        let img = ImageBuffer::from_fn(64, 64, 1, |x, y, _| ((x * 31 + y * 17) % 256) as u8);
        let grid = PatchGrid::for_image(&img).unwrap();
        let mask = random_mask(&grid, 0.8, 1).unwrap();
        let out = inpaint_harmonic(
            &img,
            &mask,
            InpaintParams {
                max_iter: 1,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 1);
    }
}
