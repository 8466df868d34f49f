//! Semantic image compression toolkit.
//!
//! Two sender pipelines share a segmentation map of the input frame:
//!
//! * [`mmsd`] ships structure only: a downsampled label map, a Canny edge map and a text
//!   caption, packed into one [`container::Container`] for an external generative decoder.
//! * [`samr`] zeroes low-importance 8x8 patches according to per-group probabilities
//!   ([`masking`]) before JPEG encoding; the receiver detects the holes and inpaints them.
//!
//! [`metrics`] provides BPP, PSNR and MS-SSIM for rate–distortion evaluation.

pub mod caption;
pub mod codec;
pub mod container;
pub mod edges;
mod error;
pub mod external;
pub mod image;
pub mod masking;
pub mod meta;
pub mod metrics;
pub mod mmsd;
pub mod samr;
pub mod segmap;
pub mod taxonomy;

pub use crate::caption::Caption;
pub use crate::error::{Error, Result};
pub use crate::image::{load_image, ImageBuffer};
pub use crate::segmap::{load_segmap, SegMap};
pub use crate::taxonomy::{ClassTaxonomy, SemanticGroup};
