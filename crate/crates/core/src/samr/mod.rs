//! Semantic-aware masking sender and inpainting receiver.
//!
//! Sender: label map -> per-patch Bernoulli mask -> zero-filled image -> JPEG.
//! Receiver: decode -> mask (side channel if present, otherwise threshold detection)
//! -> reconstructor.

mod detect;
mod inpaint;

use std::time::Duration;

pub use detect::{detect_mask, DEFAULT_TAU};
pub use inpaint::{harmonic_solve, inpaint_harmonic, HarmonicSolution, InpaintParams, Inpainted};

use crate::codec::{self, EncodedBlob, Format};
use crate::container::{Container, Entry, Tag};
use crate::error::{Error, Result};
use crate::external::CommandTemplate;
use crate::image::ImageBuffer;
use crate::masking::{
    apply_mask, mask_to_rle, rle_to_mask, semantic_mask, MaskConfig, PatchGrid, PatchMask,
};
use crate::meta::{Metadata, SamrMeta};
use crate::segmap::SegMap;

#[derive(Clone, Debug, PartialEq)]
pub struct SamrBitstream {
    pub image: EncodedBlob,
    /// Run-length patch mask, sent only when exact mask recovery is requested.
    pub mask_side_channel: Option<Vec<u8>>,
    pub meta: SamrMeta,
}

impl SamrBitstream {
    pub fn to_container(&self) -> Result<Container> {
        let mut c = Container::new();
        c.push(Entry::new(Tag::JPG, self.image.bytes.clone())?);
        if let Some(rle) = &self.mask_side_channel {
            c.push(Entry::new(Tag::MSK, rle.clone())?);
        }
        c.push(Metadata::Samr(self.meta.clone()).to_entry());
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let meta = match Metadata::from_container(c)? {
            Metadata::Samr(m) => m,
            Metadata::Mmsd(_) => {
                return Err(Error::Container("container holds an MMSD payload".into()))
            }
        };
        let mask_side_channel = c.get(Tag::MSK).map(<[u8]>::to_vec);
        if let Some(rle) = &mask_side_channel {
            rle_to_mask(rle, meta.n_h, meta.n_w)?;
        }
        Ok(Self {
            image: EncodedBlob {
                format: meta.format,
                quality: meta.format.is_lossy().then_some(meta.quality),
                bytes: c.require(Tag::JPG)?.to_vec(),
                src_w: meta.width,
                src_h: meta.height,
                channels: 3,
            },
            mask_side_channel,
            meta,
        })
    }

    pub fn total_bytes(&self) -> Result<usize> {
        Ok(self.to_container()?.encoded_len())
    }

    pub fn grid(&self) -> Result<PatchGrid> {
        PatchGrid::new(self.meta.width, self.meta.height)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamrOptions {
    pub quality: u8,
    pub seed: u64,
    pub format: Format,
    pub mask_side_channel: bool,
}

impl Default for SamrOptions {
    fn default() -> Self {
        Self {
            quality: 10,
            seed: 0,
            format: Format::Jpeg,
            mask_side_channel: false,
        }
    }
}

/// Sender output: the bitstream plus the sender-side artifacts used for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct SamrEncoding {
    pub bitstream: SamrBitstream,
    pub mask: PatchMask,
    pub masked: ImageBuffer,
}

pub fn samr_encode(
    img: &ImageBuffer,
    seg: &SegMap,
    config: &MaskConfig,
    opts: &SamrOptions,
) -> Result<SamrEncoding> {
    if seg.width() != img.width() || seg.height() != img.height() {
        return Err(Error::Dimension(format!(
            "segmap {}x{} does not match image {}x{}",
            seg.width(),
            seg.height(),
            img.width(),
            img.height()
        )));
    }
    if img.channels() != 3 {
        return Err(Error::Precondition("SAMR expects an RGB image".into()));
    }
    let grid = PatchGrid::for_image(img)?;
    let mask = semantic_mask(seg, config, &grid, opts.seed)?;
    let masked = apply_mask(img, &mask)?;
    let image = codec::encode(&masked, opts.format, Some(opts.quality))?;
    let bitstream = SamrBitstream {
        image,
        mask_side_channel: opts.mask_side_channel.then(|| mask_to_rle(&mask)),
        meta: SamrMeta {
            width: img.width(),
            height: img.height(),
            n_h: grid.n_h(),
            n_w: grid.n_w(),
            config: config.id(),
            quality: opts.quality,
            seed: opts.seed,
            format: opts.format,
        },
    };
    Ok(SamrEncoding {
        bitstream,
        mask,
        masked,
    })
}

/// How the receiver fills dropped patches.
#[derive(Clone, Debug, PartialEq)]
pub enum Reconstructor {
    /// Return the decoded image untouched.
    Passthrough,
    Harmonic(InpaintParams),
    /// External model. Placeholders: `{input}` (decoded PNG), `{mask}` (PNG, 255 where
    /// masked), `{output}` (PNG the command must write).
    External(CommandTemplate),
}

impl Default for Reconstructor {
    fn default() -> Self {
        Reconstructor::Harmonic(InpaintParams::default())
    }
}

impl Reconstructor {
    pub fn external(template: impl Into<String>, timeout: Duration) -> Self {
        Reconstructor::External(CommandTemplate::new(template).with_timeout(timeout))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamrDecoded {
    pub image: ImageBuffer,
    /// The decoded (still masked) image before reconstruction.
    pub decoded: ImageBuffer,
    pub mask: PatchMask,
    pub mask_from_side_channel: bool,
}

/// Recovers the mask from the side channel when present, otherwise by thresholding the
/// decoded image at `tau`.
pub fn recover_mask(
    bs: &SamrBitstream,
    decoded: &ImageBuffer,
    tau: f64,
) -> Result<(PatchMask, bool)> {
    let grid = bs.grid()?;
    match &bs.mask_side_channel {
        Some(rle) => Ok((rle_to_mask(rle, grid.n_h(), grid.n_w())?, true)),
        None => Ok((detect_mask(decoded, &grid, tau)?, false)),
    }
}

pub fn samr_decode(bs: &SamrBitstream, rec: &Reconstructor, tau: f64) -> Result<SamrDecoded> {
    let decoded = codec::decode(&bs.image)?;
    let (mask, from_side) = recover_mask(bs, &decoded, tau)?;
    let image = reconstruct(&decoded, &mask, rec)?;
    Ok(SamrDecoded {
        image,
        decoded,
        mask,
        mask_from_side_channel: from_side,
    })
}

pub fn reconstruct(
    decoded: &ImageBuffer,
    mask: &PatchMask,
    rec: &Reconstructor,
) -> Result<ImageBuffer> {
    match rec {
        Reconstructor::Passthrough => Ok(decoded.clone()),
        Reconstructor::Harmonic(params) => Ok(inpaint_harmonic(decoded, mask, *params)?.image),
        Reconstructor::External(cmd) => {
            let grid = PatchGrid::for_image(decoded)?;
            let dir = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
            let input = dir.path().join("input.png");
            let mask_png = dir.path().join("mask.png");
            let output = dir.path().join("output.png");
            decoded.save_png(&input)?;
            let pixels = mask.pixel_mask(&grid);
            ImageBuffer::new(
                decoded.width(),
                decoded.height(),
                1,
                pixels.iter().map(|&m| if m { 255 } else { 0 }).collect(),
            )?
            .save_png(&mask_png)?;
            let img = cmd.run_for_image(
                &[
                    ("input", input.as_path()),
                    ("mask", mask_png.as_path()),
                    ("output", output.as_path()),
                ],
                &output,
                decoded.width(),
                decoded.height(),
            )?;
            if img.channels() != decoded.channels() {
                return Err(Error::External(format!(
                    "reconstructor wrote {} channels, expected {}",
                    img.channels(),
                    decoded.channels()
                )));
            }
            Ok(img)
        }
    }
}

/// `w_masked * mean|pred - target|` over masked samples plus `w_unmasked *` the same mean
/// over unmasked samples. An empty region contributes zero.
pub fn masked_l1(
    pred: &ImageBuffer,
    target: &ImageBuffer,
    mask: &PatchMask,
    w_masked: f64,
    w_unmasked: f64,
) -> Result<f64> {
    if !pred.same_shape(target) {
        return Err(Error::Dimension(
            "prediction and target differ in shape".into(),
        ));
    }
    if w_masked < 0.0 || w_unmasked < 0.0 {
        return Err(Error::Precondition(
            "loss weights must be non-negative".into(),
        ));
    }
    let grid = PatchGrid::for_image(pred)?;
    if !mask.matches(&grid) {
        return Err(Error::Dimension(
            "mask does not match the image grid".into(),
        ));
    }
    let ch = pred.channels() as usize;
    let mut sums = [0.0f64; 2];
    let mut counts = [0usize; 2];
    for (p, &m) in mask.pixel_mask(&grid).iter().enumerate() {
        let k = m as usize;
        for c in 0..ch {
            let i = p * ch + c;
            sums[k] += (pred.data()[i] as f64 - target.data()[i] as f64).abs();
            counts[k] += 1;
        }
    }
    let mean = |k: usize| {
        if counts[k] == 0 {
            0.0
        } else {
            sums[k] / counts[k] as f64
        }
    };
    Ok(w_masked * mean(1) + w_unmasked * mean(0))
}
