//! `MET` entry: JSON describing how the rest of a container was produced.

use serde::{Deserialize, Serialize};

use crate::codec::Format;
use crate::container::{Container, Entry, Tag};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MmsdMeta {
    pub width: u32,
    pub height: u32,
    pub seg_width: u32,
    pub seg_height: u32,
    pub canny_low: f64,
    pub canny_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamrMeta {
    pub width: u32,
    pub height: u32,
    pub n_h: u32,
    pub n_w: u32,
    pub config: u8,
    pub quality: u8,
    pub seed: u64,
    pub format: Format,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pipeline", rename_all = "lowercase")]
pub enum Metadata {
    Mmsd(MmsdMeta),
    Samr(SamrMeta),
}

impl Metadata {
    pub fn to_entry(&self) -> Entry {
        let json = serde_json::to_vec(self).expect("metadata serializes");
        Entry::new(Tag::MET, json).expect("MET is a recognized tag")
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        let body = c.require(Tag::MET)?;
        serde_json::from_slice(body).map_err(|e| Error::Container(format!("bad MET entry: {e}")))
    }
}
