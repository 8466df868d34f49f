//! Corpus discovery.
//!
//! Two layouts are recognized:
//!
//! * generic: `<name>.png|.jpg` with a label map `<name>.labels.png` beside it;
//! * Cityscapes: `*_leftImg8bit.png` with `*_gtFine_labelIds.png` either in the same
//!   directory or in the mirrored `gtFine/` tree.
//!
//! Captions are optional sidecars, `<stem>.caption.txt` next to the image.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use semwire_core::caption::{load_caption_sidecar, sidecar_path};
use semwire_core::{load_image, load_segmap, Caption, ClassTaxonomy, ImageBuffer, SegMap};
use walkdir::WalkDir;

use crate::error::{HarnessError, Result};

const LABEL_SUFFIX: &str = ".labels.png";
const CS_IMAGE_SUFFIX: &str = "_leftImg8bit.png";
const CS_LABEL_SUFFIX: &str = "_gtFine_labelIds.png";

/// Whether reference-bitrate expectations for Cityscapes frames apply to this corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum CorpusKind {
    #[default]
    Generic,
    Cityscapes,
}

impl FromStr for CorpusKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "generic" => Ok(Self::Generic),
            "cityscapes" => Ok(Self::Cityscapes),
            other => Err(HarnessError::Plan(format!("unknown corpus kind {other:?}"))),
        }
    }
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Generic => "generic",
            Self::Cityscapes => "cityscapes",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusItem {
    /// Stable identifier used in CSV output: the image path relative to the corpus root,
    /// without extension.
    pub id: String,
    pub image: PathBuf,
    pub segmap: PathBuf,
    pub caption: Option<PathBuf>,
}

impl CorpusItem {
    pub fn load_image(&self) -> Result<ImageBuffer> {
        Ok(load_image(&self.image)?)
    }

    pub fn load_segmap(&self, taxonomy: Arc<ClassTaxonomy>) -> Result<SegMap> {
        Ok(load_segmap(&self.segmap, taxonomy)?)
    }

    pub fn load_caption(&self) -> Result<Option<Caption>> {
        match self.caption {
            Some(_) => Ok(Some(load_caption_sidecar(&self.image)?)),
            None => Ok(None),
        }
    }

    /// Size of the original image file in bytes.
    pub fn original_bytes(&self) -> Result<u64> {
        std::fs::metadata(&self.image)
            .map(|m| m.len())
            .map_err(|e| HarnessError::io(&self.image, e))
    }
}

fn file_name(p: &Path) -> &str {
    p.file_name().and_then(|n| n.to_str()).unwrap_or("")
}

fn cityscapes_label(image: &Path) -> Option<PathBuf> {
    let name = file_name(image);
    let stem = name.strip_suffix(CS_IMAGE_SUFFIX)?;
    let label_name = format!("{stem}{CS_LABEL_SUFFIX}");
    let beside = image.with_file_name(&label_name);
    if beside.is_file() {
        return Some(beside);
    }
    // leftImg8bit/<split>/<city>/x.png -> gtFine/<split>/<city>/x.png
    let mirrored: PathBuf = image
        .with_file_name(&label_name)
        .components()
        .map(|c| {
            if c.as_os_str() == "leftImg8bit" {
                std::ffi::OsStr::new("gtFine").to_owned()
            } else {
                c.as_os_str().to_owned()
            }
        })
        .collect();
    mirrored.is_file().then_some(mirrored)
}

fn generic_label(image: &Path) -> Option<PathBuf> {
    let name = file_name(image);
    if name.ends_with(LABEL_SUFFIX) {
        return None;
    }
    let stem = Path::new(name).file_stem()?.to_str()?;
    let label = image.with_file_name(format!("{stem}{LABEL_SUFFIX}"));
    label.is_file().then_some(label)
}

fn is_candidate(p: &Path) -> bool {
    let name = file_name(p).to_ascii_lowercase();
    (name.ends_with(".png") || name.ends_with(".jpg") || name.ends_with(".jpeg"))
        && !name.ends_with(LABEL_SUFFIX)
        && !name.ends_with(&CS_LABEL_SUFFIX.to_ascii_lowercase())
        && !name.contains("_gtfine_")
}

/// Finds every image with a label map under `root`, sorted by id. Images without a label
/// map are skipped with a debug log. An empty result is an error.
pub fn discover(root: &Path) -> Result<Vec<CorpusItem>> {
    if !root.is_dir() {
        return Err(HarnessError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "corpus directory not found"),
        ));
    }
    let mut items = Vec::new();
    for entry in WalkDir::new(root).follow_links(true).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            HarnessError::io(path, e.into())
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || !is_candidate(path) {
            continue;
        }
        let Some(segmap) = cityscapes_label(path).or_else(|| generic_label(path)) else {
            log::debug!("{}: no label map, skipped", path.display());
            continue;
        };
        let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
        let id = rel.to_string_lossy().replace('\\', "/");
        let caption = sidecar_path(path);
        items.push(CorpusItem {
            id,
            image: path.to_path_buf(),
            segmap,
            caption: caption.is_file().then_some(caption),
        });
    }
    if items.is_empty() {
        return Err(HarnessError::EmptyCorpus(root.to_path_buf()));
    }
    items.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn touch(p: &Path) {
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        std::fs::write(p, b"x").unwrap();
    }

    #[test]
    fn generic_layout() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        touch(&d.join("b.png"));
        touch(&d.join("b.labels.png"));
        touch(&d.join("a.jpg"));
        touch(&d.join("a.labels.png"));
        touch(&d.join("a.caption.txt"));
        touch(&d.join("orphan.png"));
        let items = discover(d).unwrap();
        let ids: Vec<&str> = items.iter().map(|i| i.id.as_str()).collect();
        assert_eq!(ids, ["a", "b"]);
        assert!(items[0].caption.is_some());
        assert!(items[1].caption.is_none());
    }

    #[test]
    fn cityscapes_layout() {
        let dir = tempfile::tempdir().unwrap();
        let d = dir.path();
        touch(&d.join("leftImg8bit/val/lindau/lindau_000000_000019_leftImg8bit.png"));
        touch(&d.join("gtFine/val/lindau/lindau_000000_000019_gtFine_labelIds.png"));
        touch(&d.join("gtFine/val/lindau/lindau_000000_000019_gtFine_color.png"));
        let items = discover(d).unwrap();
        assert_eq!(items.len(), 1);
        assert_eq!(
            items[0].id,
            "leftImg8bit/val/lindau/lindau_000000_000019_leftImg8bit"
        );
        assert!(items[0]
            .segmap
            .ends_with("gtFine/val/lindau/lindau_000000_000019_gtFine_labelIds.png"));
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            discover(dir.path()),
            Err(HarnessError::EmptyCorpus(_))
        ));
        assert!(discover(&dir.path().join("missing")).is_err());
    }
}
