use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::{Error, Result};

/// Scene description transmitted alongside the structural maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Caption {
    text: String,
}

impl Caption {
    pub fn new(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }

    pub fn from_utf8(bytes: &[u8]) -> Result<Self> {
        std::str::from_utf8(bytes)
            .map(Self::new)
            .map_err(|e| Error::Container(format!("caption is not UTF-8: {e}")))
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn byte_len(&self) -> usize {
        self.text.len()
    }

    /// Whitespace-delimited token count.
    pub fn word_count(&self) -> usize {
        self.text.split_whitespace().count()
    }

    pub fn is_empty(&self) -> bool {
        self.text.trim().is_empty()
    }
}

/// `<dir>/<stem>.caption.txt` for an image at `<dir>/<stem>.<ext>`.
pub fn sidecar_path(image_path: &Path) -> PathBuf {
    let stem = image_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    image_path.with_file_name(format!("{stem}.caption.txt"))
}

/// Reads the sidecar caption of an image. Trailing newlines are dropped.
pub fn load_caption_sidecar(image_path: &Path) -> Result<Caption> {
    let path = sidecar_path(image_path);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(Caption::new(text.trim_end_matches(['\n', '\r'])))
}

/// Runs an external caption generator. `{image}` in the template is replaced with the
/// image path; the caption is the command's stdout.
pub fn caption_from_command(template: &str, image_path: &Path) -> Result<Caption> {
    let cmd = template.replace("{image}", &shell_quote(&image_path.to_string_lossy()));
    let out = Command::new("sh")
        .arg("-c")
        .arg(&cmd)
        .output()
        .map_err(|e| Error::External(format!("spawning `{cmd}`: {e}")))?;
    if !out.status.success() {
        return Err(Error::External(format!(
            "`{cmd}` exited with {}: {}",
            out.status,
            String::from_utf8_lossy(&out.stderr).trim()
        )));
    }
    let text = String::from_utf8(out.stdout)
        .map_err(|_| Error::External(format!("`{cmd}` printed non-UTF-8 output")))?;
    Ok(Caption::new(text.trim()))
}

pub(crate) fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}
