//! JPEG and WebP adapters with exact byte accounting, plus nearest-neighbor label
//! resampling for transmitted segmentation maps.
//!
//! JPEG uses baseline Huffman coding with 4:2:0 chroma subsampling and the standard
//! quantization tables scaled by quality (libjpeg convention). WebP goes through libwebp.

use std::fmt;
use std::str::FromStr;

use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::segmap::SegMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Jpeg,
    WebpLossy,
    WebpLossless,
}

impl Format {
    pub fn is_lossy(self) -> bool {
        !matches!(self, Format::WebpLossless)
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Jpeg => "jpeg",
            Format::WebpLossy => "webp-lossy",
            Format::WebpLossless => "webp-lossless",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jpeg" | "jpg" => Ok(Format::Jpeg),
            "webp-lossy" | "webp" => Ok(Format::WebpLossy),
            "webp-lossless" => Ok(Format::WebpLossless),
            other => Err(Error::Codec(format!("unknown format {other:?}"))),
        }
    }
}

/// A compressed bitstream together with what is needed to decode and account for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedBlob {
    pub format: Format,
    /// Quality factor for lossy formats.
    pub quality: Option<u8>,
    pub bytes: Vec<u8>,
    pub src_w: u32,
    pub src_h: u32,
    /// Channel count of the source; WebP always stores RGB, gray sources are restored on
    /// decode.
    pub channels: u8,
}

impl EncodedBlob {
    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

pub fn encode(img: &ImageBuffer, format: Format, quality: Option<u8>) -> Result<EncodedBlob> {
    let quality = match (format.is_lossy(), quality) {
        (true, Some(q)) if (1..=100).contains(&q) => Some(q),
        (true, Some(q)) => return Err(Error::Codec(format!("quality {q} outside 1..=100"))),
        (true, None) => return Err(Error::Codec(format!("{format} needs a quality factor"))),
        (false, _) => None,
    };
    let bytes = match format {
        Format::Jpeg => encode_jpeg(img, quality.expect("checked above"))?,
        Format::WebpLossy => encode_webp(img, Some(quality.expect("checked above")))?,
        Format::WebpLossless => encode_webp(img, None)?,
    };
    if bytes.is_empty() {
        return Err(Error::Codec(format!("{format} encoder produced no output")));
    }
    Ok(EncodedBlob {
        format,
        quality,
        bytes,
        src_w: img.width(),
        src_h: img.height(),
        channels: img.channels(),
    })
}

pub fn encode_jpeg_q(img: &ImageBuffer, quality: u8) -> Result<EncodedBlob> {
    encode(img, Format::Jpeg, Some(quality))
}

pub fn encode_lossless(img: &ImageBuffer) -> Result<EncodedBlob> {
    encode(img, Format::WebpLossless, None)
}

fn encode_jpeg(img: &ImageBuffer, quality: u8) -> Result<Vec<u8>> {
    let (w, h) = dims_u16(img)?;
    let mut out = Vec::new();
    let mut enc = Encoder::new(&mut out, quality);
    let color = if img.channels() == 1 {
        ColorType::Luma
    } else {
        enc.set_sampling_factor(SamplingFactor::R_4_2_0);
        ColorType::Rgb
    };
    enc.encode(img.data(), w, h, color)
        .map_err(|e| Error::Codec(format!("jpeg encode: {e}")))?;
    Ok(out)
}

fn dims_u16(img: &ImageBuffer) -> Result<(u16, u16)> {
    match (u16::try_from(img.width()), u16::try_from(img.height())) {
        (Ok(w), Ok(h)) => Ok((w, h)),
        _ => Err(Error::Codec(format!(
            "{}x{} exceeds JPEG dimension limits",
            img.width(),
            img.height()
        ))),
    }
}

fn encode_webp(img: &ImageBuffer, quality: Option<u8>) -> Result<Vec<u8>> {
    const MAX_DIM: u32 = 16383;
    if img.width() > MAX_DIM || img.height() > MAX_DIM {
        return Err(Error::Codec("image exceeds WebP dimension limits".into()));
    }
    let rgb_storage;
    let rgb = if img.channels() == 1 {
        rgb_storage = img
            .data()
            .iter()
            .flat_map(|&v| [v, v, v])
            .collect::<Vec<u8>>();
        &rgb_storage[..]
    } else {
        img.data()
    };
    let encoder = webp::Encoder::from_rgb(rgb, img.width(), img.height());
    let mut config =
        webp::WebPConfig::new().map_err(|_| Error::Codec("libwebp config init failed".into()))?;
    match quality {
        Some(q) => {
            config.lossless = 0;
            config.quality = q as f32;
            config.method = 4;
        }
        None => {
            config.lossless = 1;
            config.quality = 100.0;
            config.method = 6;
            config.exact = 1;
        }
    }
    let mem = encoder
        .encode_advanced(&config)
        .map_err(|e| Error::Codec(format!("webp encode: {e:?}")))?;
    Ok(mem.to_vec())
}

pub fn decode(blob: &EncodedBlob) -> Result<ImageBuffer> {
    let img = match blob.format {
        Format::Jpeg => decode_jpeg(&blob.bytes)?,
        Format::WebpLossy | Format::WebpLossless => decode_webp(&blob.bytes, blob.channels)?,
    };
    if img.width() != blob.src_w || img.height() != blob.src_h {
        return Err(Error::Codec(format!(
            "decoded {}x{}, expected {}x{}",
            img.width(),
            img.height(),
            blob.src_w,
            blob.src_h
        )));
    }
    if img.channels() != blob.channels {
        return Err(Error::Codec(format!(
            "decoded {} channels, expected {}",
            img.channels(),
            blob.channels
        )));
    }
    Ok(img)
}

/// Strict JPEG decode: the stream must start with SOI and end with EOI, so truncated
/// transmissions are reported instead of being padded by the decoder.
pub fn decode_jpeg(bytes: &[u8]) -> Result<ImageBuffer> {
    if bytes.len() < 4 || bytes[..2] != [0xFF, 0xD8] {
        return Err(Error::Codec("missing JPEG SOI marker".into()));
    }
    if bytes[bytes.len() - 2..] != [0xFF, 0xD9] {
        return Err(Error::Codec(
            "JPEG stream is truncated (no EOI marker)".into(),
        ));
    }
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Jpeg)
        .map_err(|e| Error::Codec(format!("jpeg decode: {e}")))?;
    Ok(ImageBuffer::from_dynamic(img))
}

fn decode_webp(bytes: &[u8], channels: u8) -> Result<ImageBuffer> {
    let decoded = webp::Decoder::new(bytes)
        .decode()
        .ok_or_else(|| Error::Codec("webp decode failed".into()))?;
    let (w, h) = (decoded.width(), decoded.height());
    let bpp = if decoded.is_alpha() { 4 } else { 3 };
    let data: &[u8] = &decoded;
    let samples: Vec<u8> = if channels == 1 {
        data.chunks_exact(bpp).map(|p| p[0]).collect()
    } else {
        data.chunks_exact(bpp)
            .flat_map(|p| [p[0], p[1], p[2]])
            .collect()
    };
    ImageBuffer::new(w, h, channels, samples)
}

/// Source index for destination index `d` under nearest-neighbor resampling, sampling at
/// pixel centers.
#[inline]
fn nn_source(d: u32, src: u32, dst: u32) -> u32 {
    (((2 * d as u64 + 1) * src as u64) / (2 * dst as u64)) as u32
}

fn resample_labels(seg: &SegMap, w: u32, h: u32) -> Result<SegMap> {
    let xs: Vec<u32> = (0..w).map(|x| nn_source(x, seg.width(), w)).collect();
    SegMap::from_fn(w, h, seg.taxonomy().clone(), |x, y| {
        seg.label(xs[x as usize], nn_source(y, seg.height(), h))
    })
}

/// Nearest-neighbor label downsampling; labels are categorical and never interpolated.
pub fn downsample_segmap(seg: &SegMap, target_w: u32, target_h: u32) -> Result<SegMap> {
    if target_w == 0 || target_h == 0 || target_w > seg.width() || target_h > seg.height() {
        return Err(Error::Dimension(format!(
            "cannot downsample {}x{} to {target_w}x{target_h}",
            seg.width(),
            seg.height()
        )));
    }
    resample_labels(seg, target_w, target_h)
}

/// Nearest-neighbor label upsampling, the inverse of [`downsample_segmap`].
pub fn upsample_segmap(seg: &SegMap, target_w: u32, target_h: u32) -> Result<SegMap> {
    if target_w < seg.width() || target_h < seg.height() {
        return Err(Error::Dimension(format!(
            "cannot upsample {}x{} to {target_w}x{target_h}",
            seg.width(),
            seg.height()
        )));
    }
    resample_labels(seg, target_w, target_h)
}
