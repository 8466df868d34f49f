//! Multi-modal decomposition sender: a downsampled label map, a Canny edge map and a
//! caption replace the image. The receiver side only restores those modalities; scene
//! synthesis is delegated to an external generative model through a command hook.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::caption::Caption;
use crate::codec::{self, EncodedBlob, Format};
use crate::container::{Container, Entry, Tag};
use crate::edges::{self, EdgeMap};
use crate::error::{Error, Result};
use crate::external::CommandTemplate;
use crate::image::ImageBuffer;
use crate::meta::{Metadata, MmsdMeta};
use crate::segmap::SegMap;
use crate::taxonomy::ClassTaxonomy;

#[derive(Clone, Debug, PartialEq)]
pub struct MmsdOptions {
    /// Resolution of the transmitted label map. Each axis is clamped to the source size.
    pub seg_target: (u32, u32),
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for MmsdOptions {
    fn default() -> Self {
        Self {
            seg_target: (1024, 512),
            canny_low: edges::DEFAULT_LOW,
            canny_high: edges::DEFAULT_HIGH,
        }
    }
}

/// The transmitted triple plus the metadata needed to restore it.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsdPayload {
    pub seg_blob: EncodedBlob,
    pub edge_blob: EncodedBlob,
    pub caption: Caption,
    pub meta: MmsdMeta,
}

impl MmsdPayload {
    pub fn to_container(&self) -> Result<Container> {
        Ok(Container::from_entries(vec![
            Entry::new(Tag::SEG, self.seg_blob.bytes.clone())?,
            Entry::new(Tag::EDG, self.edge_blob.bytes.clone())?,
            Entry::new(Tag::CAP, self.caption.text().as_bytes().to_vec())?,
            Metadata::Mmsd(self.meta.clone()).to_entry(),
        ]))
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let meta = match Metadata::from_container(c)? {
            Metadata::Mmsd(m) => m,
            Metadata::Samr(_) => {
                return Err(Error::Container("container holds a SAMR payload".into()))
            }
        };
        let lossless = |bytes: &[u8], w, h| EncodedBlob {
            format: Format::WebpLossless,
            quality: None,
            bytes: bytes.to_vec(),
            src_w: w,
            src_h: h,
            channels: 1,
        };
        Ok(Self {
            seg_blob: lossless(c.require(Tag::SEG)?, meta.seg_width, meta.seg_height),
            edge_blob: lossless(c.require(Tag::EDG)?, meta.width, meta.height),
            caption: Caption::from_utf8(c.require(Tag::CAP)?)?,
            meta,
        })
    }

    /// Serialized size of the whole container.
    pub fn total_bytes(&self) -> Result<usize> {
        Ok(self.to_container()?.encoded_len())
    }
}

/// Builds the payload: label map downsampled and WebP-lossless coded, Canny edges of the
/// luma at full resolution, and the caption verbatim.
pub fn mmsd_encode(
    img: &ImageBuffer,
    seg: &SegMap,
    caption: &Caption,
    opts: &MmsdOptions,
) -> Result<MmsdPayload> {
    if seg.width() != img.width() || seg.height() != img.height() {
        return Err(Error::Dimension(format!(
            "segmap {}x{} does not match image {}x{}",
            seg.width(),
            seg.height(),
            img.width(),
            img.height()
        )));
    }
    if caption.is_empty() {
        return Err(Error::Precondition("caption is empty".into()));
    }
    let seg_w = opts.seg_target.0.min(img.width());
    let seg_h = opts.seg_target.1.min(img.height());
    let small = codec::downsample_segmap(seg, seg_w, seg_h)?;
    let edge_map = edges::canny(&edges::to_grayscale(img), opts.canny_low, opts.canny_high)?;
    Ok(MmsdPayload {
        seg_blob: codec::encode_lossless(&small.to_image())?,
        edge_blob: codec::encode_lossless(&edge_map.to_image())?,
        caption: caption.clone(),
        meta: MmsdMeta {
            width: img.width(),
            height: img.height(),
            seg_width: seg_w,
            seg_height: seg_h,
            canny_low: opts.canny_low,
            canny_high: opts.canny_high,
        },
    })
}

pub fn mmsd_pack(
    img: &ImageBuffer,
    seg: &SegMap,
    caption: &Caption,
    opts: &MmsdOptions,
) -> Result<Container> {
    mmsd_encode(img, seg, caption, opts)?.to_container()
}

/// Receiver-side view of an MMSD container.
#[derive(Clone, Debug, PartialEq)]
pub struct MmsdDecoded {
    /// Label map at transmitted resolution.
    pub transmitted_seg: SegMap,
    /// Label map upsampled (nearest neighbor) to the original resolution.
    pub segmap: SegMap,
    pub edges: EdgeMap,
    pub caption: Caption,
    pub meta: MmsdMeta,
}

/// Paths written by [`MmsdDecoded::write_dir`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MmsdFiles {
    pub seg: PathBuf,
    pub edge: PathBuf,
    pub caption: PathBuf,
}

impl MmsdDecoded {
    /// Re-encodes the decoded modalities. Lossless coding makes this byte-identical to the
    /// container they were unpacked from.
    pub fn repack(&self) -> Result<Container> {
        MmsdPayload {
            seg_blob: codec::encode_lossless(&self.transmitted_seg.to_image())?,
            edge_blob: codec::encode_lossless(&self.edges.to_image())?,
            caption: self.caption.clone(),
            meta: self.meta.clone(),
        }
        .to_container()
    }

    /// Writes `seg.png` (upsampled labels), `edge.png` and `caption.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<MmsdFiles> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let files = MmsdFiles {
            seg: dir.join("seg.png"),
            edge: dir.join("edge.png"),
            caption: dir.join("caption.txt"),
        };
        self.segmap.save_png(&files.seg)?;
        self.edges.to_image().save_png(&files.edge)?;
        std::fs::write(&files.caption, self.caption.text())
            .map_err(|e| Error::io(&files.caption, e))?;
        Ok(files)
    }

    /// Invokes an external generator with `{seg}`, `{edge}`, `{caption}` and `{out}`
    /// placeholders and checks that it produced an image of the original size.
    pub fn reconstruct(
        &self,
        cmd: &CommandTemplate,
        files: &MmsdFiles,
        out: &Path,
    ) -> Result<ImageBuffer> {
        cmd.run_for_image(
            &[
                ("seg", files.seg.as_path()),
                ("edge", files.edge.as_path()),
                ("caption", files.caption.as_path()),
                ("out", out),
            ],
            out,
            self.meta.width,
            self.meta.height,
        )
    }
}

pub fn mmsd_unpack(container: &Container, taxonomy: Arc<ClassTaxonomy>) -> Result<MmsdDecoded> {
    let payload = MmsdPayload::from_container(container)?;
    let seg_img = codec::decode(&payload.seg_blob)?;
    let transmitted_seg = SegMap::from_image(&seg_img, taxonomy)?;
    let segmap = codec::upsample_segmap(&transmitted_seg, payload.meta.width, payload.meta.height)?;
    let edges = EdgeMap::from_image(&codec::decode(&payload.edge_blob)?)?;
    Ok(MmsdDecoded {
        transmitted_seg,
        segmap,
        edges,
        caption: payload.caption,
        meta: payload.meta,
    })
}

/// Original file size divided by serialized payload size.
pub fn compression_ratio(original_path: &Path, payload: &Container) -> Result<f64> {
    let original = std::fs::metadata(original_path)
        .map_err(|e| Error::io(original_path, e))?
        .len();
    Ok(original as f64 / payload.encoded_len() as f64)
}

/// Arithmetic mean of per-image ratios (not the ratio of mean sizes).
pub fn mean_ratio(ratios: &[f64]) -> Option<f64> {
    if ratios.is_empty() {
        None
    } else {
        Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
    }
}
