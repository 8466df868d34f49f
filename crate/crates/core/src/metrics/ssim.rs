//! SSIM and multi-scale SSIM on luma.
//!
//! 11x11 Gaussian window (sigma 1.5) applied without padding, K1 = 0.01, K2 = 0.03 on the
//! 0..255 range. Scales are produced by 2x2 average pooling, replicating the last row or
//! column of odd-sized planes. Negative contrast-structure terms are clamped to zero before
//! exponentiation.

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

pub const WINDOW: usize = 11;
pub const SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const C1: f64 = (K1 * 255.0) * (K1 * 255.0);
const C2: f64 = (K2 * 255.0) * (K2 * 255.0);

/// Published per-scale exponents, finest scale first.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
pub const MS_SSIM_SCALES: usize = 5;
/// Smallest side that admits all five scales: the coarsest level must still hold a full
/// window after four exact halvings.
pub const MS_SSIM_MIN_SIDE: usize = WINDOW << (MS_SSIM_SCALES - 1);

#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl Plane {
    /// Unrounded BT.601 luma of an RGB image; gray images are taken as is.
    pub fn luma(img: &ImageBuffer) -> Self {
        let v = match img.channels() {
            1 => img.data().iter().map(|&x| x as f64).collect(),
            _ => img
                .data()
                .chunks_exact(3)
                .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
                .collect(),
        };
        Self {
            w: img.width() as usize,
            h: img.height() as usize,
            v,
        }
    }

    fn downsample(&self) -> Self {
        let (w, h) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let at = |x: usize, y: usize| self.v[y.min(self.h - 1) * self.w + x.min(self.w - 1)];
        let mut v = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (sx, sy) = (2 * x, 2 * y);
                v.push(0.25 * (at(sx, sy) + at(sx + 1, sy) + at(sx, sy + 1) + at(sx + 1, sy + 1)));
            }
        }
        Self { w, h, v }
    }
}

pub fn gaussian_window() -> [f64; WINDOW] {
    let mut g = [0.0; WINDOW];
    let r = (WINDOW / 2) as f64;
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - r;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    g
}

/// Separable "valid" filtering of `src` with the Gaussian window.
fn filter_valid(src: &[f64], w: usize, h: usize, g: &[f64; WINDOW]) -> Vec<f64> {
    let (ow, oh) = (w - WINDOW + 1, h - WINDOW + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = g.iter().zip(&row[x..x + WINDOW]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            let mut acc = 0.0;
            for (k, gk) in g.iter().enumerate() {
                acc += gk * tmp[(y + k) * ow + x];
            }
            out[y * ow + x] = acc;
        }
    }
    out
}

/// Mean SSIM and mean contrast-structure term of two equally sized planes.
pub fn ssim_components(a: &Plane, b: &Plane) -> (f64, f64) {
    let g = gaussian_window();
    let (w, h) = (a.w, a.h);
    let mu_a = filter_valid(&a.v, w, h, &g);
    let mu_b = filter_valid(&b.v, w, h, &g);
    let sq = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(x, y)| x * y).collect::<Vec<_>>();
    let e_aa = filter_valid(&sq(&a.v, &a.v), w, h, &g);
    let e_bb = filter_valid(&sq(&b.v, &b.v), w, h, &g);
    let e_ab = filter_valid(&sq(&a.v, &b.v), w, h, &g);
    let n = mu_a.len();
    let (mut ssim_sum, mut cs_sum) = (0.0, 0.0);
    for i in 0..n {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_aa[i] - ma * ma;
        let var_b = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let cs = (2.0 * cov + C2) / (var_a + var_b + C2);
        let l = (2.0 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        ssim_sum += l * cs;
        cs_sum += cs;
    }
    (ssim_sum / n as f64, cs_sum / n as f64)
}

fn check_pair(a: &ImageBuffer, b: &ImageBuffer) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Dimension(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    if (a.width().min(a.height()) as usize) < WINDOW {
        return Err(Error::Dimension(format!(
            "{}x{} is smaller than the {WINDOW}x{WINDOW} window",
            a.width(),
            a.height()
        )));
    }
    Ok(())
}

/// Single-scale SSIM on luma.
pub fn ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    check_pair(a, b)?;
    Ok(ssim_components(&Plane::luma(a), &Plane::luma(b)).0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MsSsim {
    pub value: f64,
    /// Scales actually used; fewer than five when the image is too small, in which case
    /// the leading weights are renormalized.
    pub scales: usize,
}

impl MsSsim {
    pub fn is_reduced(&self) -> bool {
        self.scales < MS_SSIM_SCALES
    }
}

pub fn ms_ssim(a: &ImageBuffer, b: &ImageBuffer) -> Result<MsSsim> {
    check_pair(a, b)?;
    let side = a.width().min(a.height()) as usize;
    let mut scales = 1;
    while scales < MS_SSIM_SCALES && side >= WINDOW << scales {
        scales += 1;
    }
    if scales < MS_SSIM_SCALES {
        log::debug!(
            "ms-ssim on {}x{} uses {scales} scales",
            a.width(),
            a.height()
        );
    }
    let weight_sum: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
    let (mut pa, mut pb) = (Plane::luma(a), Plane::luma(b));
    let mut value = 1.0;
    for (s, w) in MS_SSIM_WEIGHTS[..scales].iter().enumerate() {
        let (ssim_mean, cs_mean) = ssim_components(&pa, &pb);
        let weight = w / weight_sum;
        let term = if s + 1 == scales { ssim_mean } else { cs_mean };
        value *= term.max(0.0).powf(weight);
        if s + 1 < scales {
            pa = pa.downsample();
            pb = pb.downsample();
        }
    }
    Ok(MsSsim {
        value: value.clamp(0.0, 1.0),
        scales,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_scales_need_176_pixels() {
        assert_eq!(MS_SSIM_MIN_SIDE, 176);
        let a = ImageBuffer::from_fn(176, 176, 1, |x, y, _| (x ^ y) as u8);
        assert_eq!(ms_ssim(&a, &a).unwrap().scales, 5);
        let a = ImageBuffer::from_fn(175, 300, 1, |x, y, _| (x ^ y) as u8);
        let r = ms_ssim(&a, &a).unwrap();
        assert_eq!(r.scales, 4);
        assert!(r.is_reduced());
        let a = ImageBuffer::from_fn(21, 300, 1, |x, y, _| (x ^ y) as u8);
        assert_eq!(ms_ssim(&a, &a).unwrap().scales, 1);
        let tiny = ImageBuffer::filled(10, 40, 1, 0);
        assert!(ms_ssim(&tiny, &tiny).is_err());
    }

    #[test]
    fn identical_images_score_one() {
        let a = ImageBuffer::from_fn(200, 180, 3, |x, y, c| {
            ((x * 3 + y * 7 + c as u32 * 11) % 256) as u8
        });
        assert!((ms_ssim(&a, &a).unwrap().value - 1.0).abs() < 1e-12);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn downsample_replicates_odd_edge() {
        let p = Plane {
            w: 3,
            h: 1,
            v: vec![0.0, 4.0, 8.0],
        };
        let d = p.downsample();
        assert_eq!((d.w, d.h), (2, 1));
        assert_eq!(d.v, vec![2.0, 8.0]);
    }
}
