//! Per-image MMSD payload accounting.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use semwire_core::container::Tag;
use semwire_core::mmsd::{mmsd_pack, MmsdOptions};
use semwire_core::{Caption, ClassTaxonomy};
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusItem;
use crate::error::{HarnessError, Result};
use crate::stats;

/// Byte counts of one packed payload. Entry sizes are body bytes; `payload_bytes` is the
/// full container including magic and entry headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayloadRecord {
    pub image: String,
    pub orig_bytes: u64,
    pub payload_bytes: u64,
    pub ratio: f64,
    pub seg_bytes: u64,
    pub edge_bytes: u64,
    pub caption_bytes: u64,
    pub meta_bytes: u64,
}

/// Where the caption for an item comes from when it has no sidecar.
#[derive(Clone, Debug, PartialEq)]
pub enum CaptionSource {
    /// Items without a sidecar fail.
    SidecarOnly,
    /// Items without a sidecar use this caption.
    Fallback(Caption),
}

pub fn payload_record(
    item: &CorpusItem,
    taxonomy: Arc<ClassTaxonomy>,
    captions: &CaptionSource,
    opts: &MmsdOptions,
) -> Result<PayloadRecord> {
    let image = item.load_image()?;
    let seg = item.load_segmap(taxonomy)?;
    let caption = match (item.load_caption()?, captions) {
        (Some(c), _) => c,
        (None, CaptionSource::Fallback(c)) => c.clone(),
        (None, CaptionSource::SidecarOnly) => {
            return Err(HarnessError::Plan(format!(
                "{}: no caption sidecar",
                item.id
            )));
        }
    };
    let container = mmsd_pack(&image, &seg, &caption, opts)?;
    let body = |tag: Tag| container.get(tag).map(|b| b.len() as u64).unwrap_or(0);
    let payload_bytes = container.encoded_len() as u64;
    let orig_bytes = item.original_bytes()?;
    Ok(PayloadRecord {
        image: item.id.clone(),
        orig_bytes,
        payload_bytes,
        ratio: orig_bytes as f64 / payload_bytes as f64,
        seg_bytes: body(Tag::SEG),
        edge_bytes: body(Tag::EDG),
        caption_bytes: body(Tag::CAP),
        meta_bytes: body(Tag::MET),
    })
}

/// Accounts every item in parallel; the first failure aborts the report.
pub fn payload_report(
    items: &[CorpusItem],
    captions: &CaptionSource,
    opts: &MmsdOptions,
) -> Result<Vec<PayloadRecord>> {
    let taxonomy = Arc::new(ClassTaxonomy::cityscapes());
    items
        .par_iter()
        .map(|item| payload_record(item, taxonomy.clone(), captions, opts))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PayloadSummary {
    pub images: usize,
    pub seg_kb: (f64, f64),
    pub edge_kb: (f64, f64),
    pub caption_bytes: f64,
    pub payload_kb: f64,
    pub orig_mb: f64,
    pub ratio: (f64, f64),
}

/// Means and sample standard deviations; KB and MB are decimal (1000-based).
pub fn summarize(records: &[PayloadRecord]) -> Option<PayloadSummary> {
    let col = |f: &dyn Fn(&PayloadRecord) -> f64| records.iter().map(f).collect::<Vec<f64>>();
    let ms = |xs: Vec<f64>| Some((stats::mean(&xs)?, stats::std_dev(&xs).unwrap_or(0.0)));
    Some(PayloadSummary {
        images: records.len(),
        seg_kb: ms(col(&|r| r.seg_bytes as f64 / 1000.0))?,
        edge_kb: ms(col(&|r| r.edge_bytes as f64 / 1000.0))?,
        caption_bytes: stats::mean(&col(&|r| r.caption_bytes as f64))?,
        payload_kb: stats::mean(&col(&|r| r.payload_bytes as f64 / 1000.0))?,
        orig_mb: stats::mean(&col(&|r| r.orig_bytes as f64 / 1e6))?,
        ratio: ms(col(&|r| r.ratio))?,
    })
}

pub fn write_payload_csv(path: &Path, records: &[PayloadRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush().map_err(|e| HarnessError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::write_corpus;

    #[test]
    fn accounting_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_corpus(dir.path(), 2, 256, 128, 3).unwrap();
        let recs =
            payload_report(&items, &CaptionSource::SidecarOnly, &MmsdOptions::default()).unwrap();
        for (r, item) in recs.iter().zip(&items) {
            let caption = std::fs::read(item.caption.as_ref().unwrap()).unwrap();
            assert_eq!(r.caption_bytes, caption.len() as u64);
            // magic + four 7-byte entry headers + bodies
            assert_eq!(
                r.payload_bytes,
                4 + 4 * 7 + r.seg_bytes + r.edge_bytes + r.caption_bytes + r.meta_bytes
            );
            assert_eq!(r.orig_bytes, std::fs::metadata(&item.image).unwrap().len());
            assert_eq!(r.ratio, r.orig_bytes as f64 / r.payload_bytes as f64);
        }
        let s = summarize(&recs).unwrap();
        assert_eq!(s.images, 2);
        assert!(summarize(&[]).is_none());
    }

    #[test]
    fn missing_caption_needs_a_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let items = write_corpus(dir.path(), 1, 128, 96, 0).unwrap();
        std::fs::remove_file(items[0].caption.as_ref().unwrap()).unwrap();
        let items = crate::corpus::discover(dir.path()).unwrap();
        let opts = MmsdOptions::default();
        assert!(payload_report(&items, &CaptionSource::SidecarOnly, &opts).is_err());
        let fb = CaptionSource::Fallback(Caption::new("a street"));
        assert_eq!(
            payload_report(&items, &fb, &opts).unwrap()[0].caption_bytes,
            8
        );
    }
}
