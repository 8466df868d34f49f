//! Class taxonomy: class ids, names, and the coarse masking group of every class.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const CITYSCAPES_GROUPS: &str = include_str!("../data/cityscapes_groups.txt");

/// Coarse semantic category that carries a masking probability.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SemanticGroup {
    Vehicles,
    Humans,
    FlatSurfaces,
    Construction,
    Objects,
    Nature,
    Sky,
    Background,
}

impl SemanticGroup {
    pub const ALL: [SemanticGroup; 8] = [
        SemanticGroup::Vehicles,
        SemanticGroup::Humans,
        SemanticGroup::FlatSurfaces,
        SemanticGroup::Construction,
        SemanticGroup::Objects,
        SemanticGroup::Nature,
        SemanticGroup::Sky,
        SemanticGroup::Background,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            SemanticGroup::Vehicles => "vehicles",
            SemanticGroup::Humans => "humans",
            SemanticGroup::FlatSurfaces => "flat",
            SemanticGroup::Construction => "construction",
            SemanticGroup::Objects => "objects",
            SemanticGroup::Nature => "nature",
            SemanticGroup::Sky => "sky",
            SemanticGroup::Background => "background",
        }
    }
}

impl fmt::Display for SemanticGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SemanticGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-', ' '], "");
        Ok(match norm.as_str() {
            "vehicles" | "vehicle" => SemanticGroup::Vehicles,
            "humans" | "human" => SemanticGroup::Humans,
            "flat" | "flatsurfaces" | "flatsurface" => SemanticGroup::FlatSurfaces,
            "construction" => SemanticGroup::Construction,
            "objects" | "object" => SemanticGroup::Objects,
            "nature" => SemanticGroup::Nature,
            "sky" => SemanticGroup::Sky,
            "background" | "void" => SemanticGroup::Background,
            _ => return Err(Error::Taxonomy(format!("unknown semantic group {s:?}"))),
        })
    }
}

/// Mapping from class ids `0..C` to names and masking groups. `C` is at most 256 since
/// labels travel as 8-bit samples.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTaxonomy {
    names: Vec<String>,
    groups: Vec<SemanticGroup>,
}

impl ClassTaxonomy {
    pub fn new(names: Vec<String>, groups: Vec<SemanticGroup>) -> Result<Self> {
        if names.is_empty() || names.len() > 256 {
            return Err(Error::Taxonomy(format!(
                "class count {} outside 1..=256",
                names.len()
            )));
        }
        if names.len() != groups.len() {
            return Err(Error::Taxonomy("names and groups differ in length".into()));
        }
        Ok(Self { names, groups })
    }

    /// The bundled 34-class Cityscapes `labelIds` mapping.
    pub fn cityscapes() -> Self {
        Self::parse(CITYSCAPES_GROUPS).expect("bundled taxonomy parses")
    }

    /// Parses `<id> <name> <group>` lines; `#` starts a comment. Ids must cover `0..C`
    /// exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows: Vec<(usize, String, SemanticGroup)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Taxonomy(format!(
                    "line {}: expected `<id> <name> <group>`",
                    lineno + 1
                )));
            }
            let id: usize = fields[0].parse().map_err(|_| {
                Error::Taxonomy(format!("line {}: bad class id {:?}", lineno + 1, fields[0]))
            })?;
            rows.push((id, fields[1].to_string(), fields[2].parse()?));
        }
        rows.sort_by_key(|r| r.0);
        for (expect, row) in rows.iter().enumerate() {
            if row.0 != expect {
                return Err(Error::Taxonomy(format!(
                    "class ids must be contiguous from 0; missing or duplicate id near {expect}"
                )));
            }
        }
        let (names, groups) = rows.into_iter().map(|(_, n, g)| (n, g)).unzip();
        Self::new(names, groups)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn num_classes(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, class: u8) -> &str {
        &self.names[class as usize]
    }

    /// Masking group of `class`. Panics if the class is outside the taxonomy.
    pub fn group_of(&self, class: u8) -> SemanticGroup {
        self.groups[class as usize]
    }

    /// First class id belonging to `group`, if any.
    pub fn representative(&self, group: SemanticGroup) -> Option<u8> {
        self.groups
            .iter()
            .position(|&g| g == group)
            .map(|i| i as u8)
    }
}
