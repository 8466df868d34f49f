//! SMC1 payload container.
//!
//! Layout: the 4-byte magic `SMC1`, then zero or more entries of
//! `tag (3 ASCII bytes) | length (u32 little-endian) | body (length bytes)`.
//! Every transmitted byte lives in this container, so its serialized length is the payload
//! size used for all compression accounting.

use std::fmt;

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SMC1";
/// Per-entry framing overhead: tag plus length field.
pub const ENTRY_HEADER_LEN: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tag([u8; 3]);

impl Tag {
    /// Lossless-WebP segmentation map.
    pub const SEG: Tag = Tag(*b"SEG");
    /// Lossless-WebP edge map.
    pub const EDG: Tag = Tag(*b"EDG");
    /// UTF-8 caption.
    pub const CAP: Tag = Tag(*b"CAP");
    /// JPEG bitstream.
    pub const JPG: Tag = Tag(*b"JPG");
    /// Run-length patch mask.
    pub const MSK: Tag = Tag(*b"MSK");
    /// UTF-8 JSON metadata.
    pub const MET: Tag = Tag(*b"MET");

    pub const RECOGNIZED: [Tag; 6] = [Tag::SEG, Tag::EDG, Tag::CAP, Tag::JPG, Tag::MSK, Tag::MET];

    pub fn new(bytes: [u8; 3]) -> Result<Self> {
        if !bytes.iter().all(|b| b.is_ascii_graphic()) {
            return Err(Error::Container(format!(
                "tag {bytes:?} is not printable ASCII"
            )));
        }
        Ok(Tag(bytes))
    }

    pub fn bytes(&self) -> [u8; 3] {
        self.0
    }

    pub fn is_recognized(&self) -> bool {
        Tag::RECOGNIZED.contains(self)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&String::from_utf8_lossy(&self.0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    tag: Tag,
    body: Vec<u8>,
}

impl Entry {
    /// New outgoing entry; the tag must be recognized and the body nonempty.
    pub fn new(tag: Tag, body: Vec<u8>) -> Result<Self> {
        if !tag.is_recognized() {
            return Err(Error::Container(format!(
                "refusing to write unknown tag {tag}"
            )));
        }
        if body.is_empty() {
            return Err(Error::Container(format!("{tag} entry has an empty body")));
        }
        if body.len() > u32::MAX as usize {
            return Err(Error::Container(format!("{tag} entry exceeds 4 GiB")));
        }
        Ok(Self { tag, body })
    }

    pub fn tag(&self) -> Tag {
        self.tag
    }

    pub fn body(&self) -> &[u8] {
        &self.body
    }

    pub fn into_body(self) -> Vec<u8> {
        self.body
    }

    /// Framed size of this entry inside a container.
    pub fn encoded_len(&self) -> usize {
        ENTRY_HEADER_LEN + self.body.len()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Container {
    entries: Vec<Entry>,
}

impl Container {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_entries(entries: Vec<Entry>) -> Self {
        Self { entries }
    }

    pub fn push(&mut self, entry: Entry) {
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// Body of the first entry with `tag`.
    pub fn get(&self, tag: Tag) -> Option<&[u8]> {
        self.entries.iter().find(|e| e.tag == tag).map(|e| e.body())
    }

    pub fn require(&self, tag: Tag) -> Result<&[u8]> {
        self.get(tag)
            .ok_or_else(|| Error::Container(format!("missing {tag} entry")))
    }

    /// Tags that were carried through opaquely because this build does not know them.
    pub fn unknown_tags(&self) -> Vec<Tag> {
        self.entries
            .iter()
            .map(|e| e.tag)
            .filter(|t| !t.is_recognized())
            .collect()
    }

    pub fn encoded_len(&self) -> usize {
        MAGIC.len() + self.entries.iter().map(Entry::encoded_len).sum::<usize>()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        for e in &self.entries {
            out.extend_from_slice(&e.tag.0);
            out.extend_from_slice(&(e.body.len() as u32).to_le_bytes());
            out.extend_from_slice(&e.body);
        }
        out
    }

    /// Parses a serialized container. Unknown tags are kept in place so that
    /// re-serializing reproduces the input exactly.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() || bytes[..4] != MAGIC {
            return Err(Error::Container("bad magic".into()));
        }
        let mut entries = Vec::new();
        let mut pos = MAGIC.len();
        while pos < bytes.len() {
            if bytes.len() - pos < ENTRY_HEADER_LEN {
                return Err(Error::Container(format!(
                    "truncated entry header at offset {pos}"
                )));
            }
            let tag = Tag::new([bytes[pos], bytes[pos + 1], bytes[pos + 2]])?;
            let len =
                u32::from_le_bytes(bytes[pos + 3..pos + 7].try_into().expect("4 bytes")) as usize;
            let start = pos + ENTRY_HEADER_LEN;
            let end = start
                .checked_add(len)
                .filter(|&end| end <= bytes.len())
                .ok_or_else(|| {
                    Error::Container(format!(
                        "{tag} entry at offset {pos} claims {len} bytes, {} remain",
                        bytes.len() - start
                    ))
                })?;
            if !tag.is_recognized() {
                log::warn!("carrying unknown container tag {tag} ({len} bytes) opaquely");
            }
            entries.push(Entry {
                tag,
                body: bytes[start..end].to_vec(),
            });
            pos = end;
        }
        Ok(Self { entries })
    }
}

pub fn write_container(entries: &[Entry]) -> Vec<u8> {
    Container::from_entries(entries.to_vec()).to_bytes()
}

pub fn read_container(bytes: &[u8]) -> Result<Vec<Entry>> {
    Container::from_bytes(bytes).map(|c| c.entries)
}
