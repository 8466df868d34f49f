//! Per-pixel class label maps.

use std::path::Path;
use std::sync::Arc;

use image::{DynamicImage, ImageReader};

use crate::error::{Error, Result};
use crate::image::ImageBuffer;
use crate::taxonomy::{ClassTaxonomy, SemanticGroup};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMap {
    width: u32,
    height: u32,
    labels: Vec<u8>,
    taxonomy: Arc<ClassTaxonomy>,
}

impl SegMap {
    /// Validates every label against the taxonomy; out-of-range labels are rejected,
    /// never clamped.
    pub fn new(
        width: u32,
        height: u32,
        labels: Vec<u8>,
        taxonomy: Arc<ClassTaxonomy>,
    ) -> Result<Self> {
        if width == 0 || height == 0 || labels.len() != width as usize * height as usize {
            return Err(Error::Dimension(format!(
                "{} labels cannot form a {width}x{height} map",
                labels.len()
            )));
        }
        let c = taxonomy.num_classes();
        if let Some(pos) = labels.iter().position(|&l| l as usize >= c) {
            return Err(Error::Label {
                label: labels[pos] as u32,
                x: (pos % width as usize) as u32,
                y: (pos / width as usize) as u32,
                num_classes: c,
            });
        }
        Ok(Self {
            width,
            height,
            labels,
            taxonomy,
        })
    }

    pub fn from_fn(
        width: u32,
        height: u32,
        taxonomy: Arc<ClassTaxonomy>,
        mut f: impl FnMut(u32, u32) -> u8,
    ) -> Result<Self> {
        let mut labels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                labels.push(f(x, y));
            }
        }
        Self::new(width, height, labels, taxonomy)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn taxonomy(&self) -> &Arc<ClassTaxonomy> {
        &self.taxonomy
    }

    #[inline]
    pub fn label(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn group_at(&self, x: u32, y: u32) -> SemanticGroup {
        self.taxonomy.group_of(self.label(x, y))
    }

    /// Pixel count per masking group, indexed by [`SemanticGroup::index`].
    pub fn group_histogram(&self) -> [u64; 8] {
        let mut per_class = [0u64; 256];
        for &l in &self.labels {
            per_class[l as usize] += 1;
        }
        let mut out = [0u64; 8];
        for (class, &n) in per_class
            .iter()
            .enumerate()
            .take(self.taxonomy.num_classes())
        {
            out[self.taxonomy.group_of(class as u8).index()] += n;
        }
        out
    }

    /// Labels as a single-channel image whose sample values are class ids.
    pub fn to_image(&self) -> ImageBuffer {
        ImageBuffer::new(self.width, self.height, 1, self.labels.clone())
            .expect("label count matches dimensions")
    }

    /// Reinterprets a single-channel image as labels.
    pub fn from_image(img: &ImageBuffer, taxonomy: Arc<ClassTaxonomy>) -> Result<Self> {
        if img.channels() != 1 {
            return Err(Error::Format(format!(
                "label images must be single-channel, got {} channels",
                img.channels()
            )));
        }
        Self::new(img.width(), img.height(), img.data().to_vec(), taxonomy)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_image().save_png(path)
    }
}

/// Reads a single-channel PNG whose sample values are class ids.
pub fn load_segmap(path: impl AsRef<Path>, taxonomy: Arc<ClassTaxonomy>) -> Result<SegMap> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let reader = ImageReader::with_format(std::io::Cursor::new(bytes), image::ImageFormat::Png);
    let decoded = reader.decode().map_err(|e| Error::Format(e.to_string()))?;
    let (w, h, labels): (u32, u32, Vec<u32>) = match decoded {
        DynamicImage::ImageLuma8(g) => (
            g.width(),
            g.height(),
            g.into_raw().into_iter().map(u32::from).collect(),
        ),
        DynamicImage::ImageLuma16(g) => (
            g.width(),
            g.height(),
            g.into_raw().into_iter().map(u32::from).collect(),
        ),
        other => {
            return Err(Error::Format(format!(
                "label map must be single-channel, found {:?}",
                other.color()
            )))
        }
    };
    let c = taxonomy.num_classes();
    if let Some(pos) = labels.iter().position(|&l| l as usize >= c) {
        return Err(Error::Label {
            label: labels[pos],
            x: (pos % w as usize) as u32,
            y: (pos / w as usize) as u32,
            num_classes: c,
        });
    }
    SegMap::new(
        w,
        h,
        labels.into_iter().map(|l| l as u8).collect(),
        taxonomy,
    )
}
