use std::path::Path;

use crate::error::{Error, Result};
use crate::taxonomy::SemanticGroup;

/// Per-group masking probabilities, in [`SemanticGroup::ALL`] order:
/// vehicles, humans, flat, construction, objects, nature, sky, background.
const PRESETS: [[f64; 8]; 8] = [
    [0.0, 0.2, 0.2, 0.5, 0.5, 0.8, 0.8, 0.8],
    [0.1, 0.3, 0.3, 0.55, 0.55, 0.8, 0.8, 0.8],
    [0.2, 0.4, 0.4, 0.6, 0.6, 0.8, 0.8, 0.8],
    [0.3, 0.45, 0.45, 0.65, 0.65, 0.8, 0.8, 0.8],
    [0.4, 0.5, 0.5, 0.7, 0.7, 0.8, 0.8, 0.8],
    [0.4, 0.53, 0.53, 0.73, 0.73, 0.83, 0.83, 0.83],
    [0.4, 0.57, 0.57, 0.77, 0.77, 0.87, 0.87, 0.87],
    [0.4, 0.6, 0.6, 0.8, 0.8, 0.9, 0.9, 0.9],
];

/// Presets 0, 2, 4 and 7 are the published table; the others are linear interpolations
/// between their tabulated neighbors.
const TABULATED: [u8; 4] = [0, 2, 4, 7];

/// Masking probability for each semantic group.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskConfig {
    id: u8,
    rho: [f64; 8],
}

impl MaskConfig {
    pub fn new(id: u8, rho: [f64; 8]) -> Result<Self> {
        if let Some(bad) = rho.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Config(format!("probability {bad} outside [0, 1]")));
        }
        Ok(Self { id, rho })
    }

    pub fn preset(id: u8) -> Result<Self> {
        PRESETS
            .get(id as usize)
            .map(|rho| Self { id, rho: *rho })
            .ok_or_else(|| Error::Config(format!("no preset {id}; presets are 0..=7")))
    }

    /// Same probability for every group.
    pub fn uniform(id: u8, rho: f64) -> Result<Self> {
        Self::new(id, [rho; 8])
    }

    pub fn is_tabulated(&self) -> bool {
        TABULATED.contains(&self.id) && PRESETS[self.id as usize] == self.rho
    }

    /// Parses `group:probability` lines. Every group must appear exactly once; blank lines
    /// and `#` comments are ignored.
    pub fn parse(id: u8, text: &str) -> Result<Self> {
        let mut rho = [f64::NAN; 8];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (g, p) = line.split_once(':').ok_or_else(|| {
                Error::Config(format!("line {}: expected `group:probability`", lineno + 1))
            })?;
            let group: SemanticGroup =
                g.parse().map_err(|e: Error| Error::Config(e.to_string()))?;
            let p: f64 = p.trim().parse().map_err(|_| {
                Error::Config(format!(
                    "line {}: bad probability {:?}",
                    lineno + 1,
                    p.trim()
                ))
            })?;
            if !rho[group.index()].is_nan() {
                return Err(Error::Config(format!("group {group} listed twice")));
            }
            rho[group.index()] = p;
        }
        if let Some(missing) = SemanticGroup::ALL.iter().find(|g| rho[g.index()].is_nan()) {
            return Err(Error::Config(format!("group {missing} has no probability")));
        }
        Self::new(id, rho)
    }

    pub fn load(id: u8, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(id, &text)
    }

    pub fn to_text(&self) -> String {
        SemanticGroup::ALL
            .iter()
            .map(|g| format!("{}:{}\n", g.name(), self.rho[g.index()]))
            .collect()
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn rho(&self, group: SemanticGroup) -> f64 {
        self.rho[group.index()]
    }

    pub fn rhos(&self) -> &[f64; 8] {
        &self.rho
    }

    pub fn masks_anything(&self) -> bool {
        self.rho.iter().any(|&p| p > 0.0)
    }
}
