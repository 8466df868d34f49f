//! Canny edge detection for the structural modality.
//!
//! Pipeline: 5x5 Gaussian blur (sigma 1.4) -> 3x3 Sobel -> Euclidean gradient magnitude ->
//! non-maximum suppression over four direction bins -> double-threshold hysteresis with
//! 8-connectivity. Blur and Sobel replicate the border.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub const DEFAULT_LOW: f64 = 100.0;
pub const DEFAULT_HIGH: f64 = 200.0;

const BLUR_SIGMA: f64 = 1.4;
const BLUR_RADIUS: usize = 2;

/// Binary edge map stored as 0/255 bytes at source resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl EdgeMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_edge(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] != 0
    }

    pub fn edge_count(&self) -> usize {
        self.data.iter().filter(|&&v| v != 0).count()
    }

    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::new(self.width, self.height, 1, self.data.clone())
            .expect("dimensions consistent")
    }

    /// Accepts any single-channel image whose samples are all 0 or 255.
    pub fn from_image(img: &ImageBuffer) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::Format("edge maps are single-channel".into()));
        }
        if img.data().iter().any(|&v| v != 0 && v != 255) {
            return Err(Error::Format(
                "edge map contains values other than 0/255".into(),
            ));
        }
        Ok(Self {
            width: img.width(),
            height: img.height(),
            data: img.data().to_vec(),
        })
    }
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)`. Gray input is returned as is.
pub fn to_grayscale(img: &ImageBuffer) -> ImageBuffer {
    if img.channels() == 1 {
        return img.clone();
    }
    let data = img
        .data()
        .chunks_exact(3)
        .map(|p| {
            let weighted = 299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32;
            ((weighted + 500) / 1000).min(255) as u8
        })
        .collect();
    ImageBuffer::new(img.width(), img.height(), 1, data).expect("same pixel count")
}

/// Canny detector with the library-default thresholds (100, 200).
pub fn canny_default(gray: &ImageBuffer) -> Result<EdgeMap> {
    canny(gray, DEFAULT_LOW, DEFAULT_HIGH)
}

pub fn canny(gray: &ImageBuffer, low: f64, high: f64) -> Result<EdgeMap> {
    if gray.channels() != 1 {
        return Err(Error::Precondition(
            "canny expects a single-channel image".into(),
        ));
    }
    if !(0.0..=255.0).contains(&low) || !(0.0..=255.0).contains(&high) || low > high {
        return Err(Error::Precondition(format!(
            "thresholds must satisfy 0 <= low <= high <= 255, got {low}, {high}"
        )));
    }
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let support = 2 * BLUR_RADIUS + 1;
    if w < support || h < support {
        return Err(Error::Dimension(format!(
            "{w}x{h} image is smaller than the {support}x{support} blur kernel"
        )));
    }

    let src: Vec<f64> = gray.data().iter().map(|&v| v as f64).collect();
    let blurred = gaussian_blur(&src, w, h);
    let (mag, bins) = sobel_gradients(&blurred, w, h);
    let thin = non_max_suppression(&mag, &bins, w, h);
    let data = hysteresis(&thin, w, h, low, high);
    Ok(EdgeMap {
        width: gray.width(),
        height: gray.height(),
        data,
    })
}

fn gaussian_kernel() -> [f64; 2 * BLUR_RADIUS + 1] {
    let mut k = [0.0; 2 * BLUR_RADIUS + 1];
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - BLUR_RADIUS as f64;
        *v = (-d * d / (2.0 * BLUR_SIGMA * BLUR_SIGMA)).exp();
    }
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

#[inline]
fn clamp_idx(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

fn gaussian_blur(src: &[f64], w: usize, h: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let r = BLUR_RADIUS as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * row[clamp_idx(x as isize + t as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (t, kv) in k.iter().enumerate() {
                acc += kv * tmp[clamp_idx(y as isize + t as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Gradient direction quantized to the neighbor pair compared during suppression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum DirBin {
    /// Gradient mostly along x: compare left/right.
    Horizontal,
    /// Gradient along +x+y (y down): compare the main diagonal.
    Diagonal,
    Vertical,
    /// Gradient along +x-y: compare the anti-diagonal.
    AntiDiagonal,
}

impl DirBin {
    fn offset(self) -> (isize, isize) {
        match self {
            DirBin::Horizontal => (1, 0),
            DirBin::Diagonal => (1, 1),
            DirBin::Vertical => (0, 1),
            DirBin::AntiDiagonal => (1, -1),
        }
    }
}

fn quantize_direction(gx: f64, gy: f64) -> DirBin {
    // tan(22.5deg) and tan(67.5deg)
    const TAN_LO: f64 = 0.414_213_562_373_095_03;
    const TAN_HI: f64 = 2.414_213_562_373_095;
    let (ax, ay) = (gx.abs(), gy.abs());
    if ay <= ax * TAN_LO {
        DirBin::Horizontal
    } else if ay >= ax * TAN_HI {
        DirBin::Vertical
    } else if (gx > 0.0) == (gy > 0.0) {
        DirBin::Diagonal
    } else {
        DirBin::AntiDiagonal
    }
}

fn sobel_gradients(src: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<DirBin>) {
    let mut mag = vec![0.0; w * h];
    let mut bins = vec![DirBin::Horizontal; w * h];
    let at = |x: isize, y: isize| src[clamp_idx(y, h) * w + clamp_idx(x, w)];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            let i = y as usize * w + x as usize;
            mag[i] = gx.hypot(gy);
            bins[i] = quantize_direction(gx, gy);
        }
    }
    (mag, bins)
}

/// Keeps a pixel when it beats its backward neighbor strictly and its forward neighbor
/// non-strictly, so a two-pixel plateau yields a one-pixel line. Out-of-image neighbors
/// count as zero.
fn non_max_suppression(mag: &[f64], bins: &[DirBin], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    let at = |x: isize, y: isize| {
        if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let m = mag[i];
            if m == 0.0 {
                continue;
            }
            let (dx, dy) = bins[i].offset();
            let (xi, yi) = (x as isize, y as isize);
            let back = at(xi - dx, yi - dy);
            let fwd = at(xi + dx, yi + dy);
            if m > back && m >= fwd {
                out[i] = m;
            }
        }
    }
    out
}

fn hysteresis(thin: &[f64], w: usize, h: usize, low: f64, high: f64) -> Vec<u8> {
    let mut out = vec![0u8; w * h];
    let mut stack = Vec::new();
    for (i, &m) in thin.iter().enumerate() {
        if m > high && out[i] == 0 {
            out[i] = 255;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (x, y) = ((j % w) as isize, (j / w) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if out[k] == 0 && thin[k] > low {
                            out[k] = 255;
                            stack.push(k);
                        }
                    }
                }
            }
        }
    }
    out
}
