//! Rate and distortion measures.

mod ssim;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ssim::{ms_ssim, ssim, ssim_components, MsSsim, Plane, MS_SSIM_MIN_SIDE, MS_SSIM_WEIGHTS};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Peak signal-to-noise ratio over all samples (RGB jointly). Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    let mse = mse(a, b)?;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0 * 255.0 / mse).log10())
}

pub fn mse(a: &ImageBuffer, b: &ImageBuffer) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::Dimension("images differ in shape".into()));
    }
    let sse: u64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sse as f64 / a.data().len() as f64)
}

pub fn bpp(payload_bytes: u64, width: u32, height: u32) -> f64 {
    payload_bytes as f64 * 8.0 / (width as f64 * height as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Jpeg,
    Samr,
    Mmsd,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Jpeg => "jpeg",
            Mode::Samr => "samr",
            Mode::Mmsd => "mmsd",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jpeg" | "jpeg-only" => Ok(Mode::Jpeg),
            "samr" => Ok(Mode::Samr),
            "mmsd" | "mmsd-payload" => Ok(Mode::Mmsd),
            other => Err(Error::Precondition(format!("unknown mode {other:?}"))),
        }
    }
}

/// One rate–distortion operating point.
///
/// `config` is the masking preset for SAMR, `"jpeg-only"` for the plain JPEG baseline and
/// `"payload"` for MMSD, whose reconstruction quality is not measured here.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RdRecord {
    pub image: String,
    pub mode: Mode,
    pub config: String,
    #[serde(rename = "Q")]
    pub q: Option<u8>,
    pub bytes: u64,
    pub bpp: f64,
    pub psnr_db: Option<f64>,
    pub ms_ssim: Option<f64>,
}

impl RdRecord {
    pub const JPEG_ONLY: &'static str = "jpeg-only";
    pub const PAYLOAD: &'static str = "payload";

    /// Resume key: one record per image, mode, config and quality.
    pub fn key(&self) -> (String, Mode, String, Option<u8>) {
        (self.image.clone(), self.mode, self.config.clone(), self.q)
    }

    /// Series label used for grouping and plotting.
    pub fn series(&self) -> String {
        match self.mode {
            Mode::Samr => format!("samr config {}", self.config),
            m => m.name().to_string(),
        }
    }
}
