//! Command-template hooks for generative models that run outside this process.

use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::caption::shell_quote;
use crate::error::{Error, Result};
use crate::image::{load_image, ImageBuffer};

/// A shell command with `{name}` placeholders, run through `sh -c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommandTemplate {
    template: String,
    timeout: Duration,
}

impl CommandTemplate {
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(600);

    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            timeout: Self::DEFAULT_TIMEOUT,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn template(&self) -> &str {
        &self.template
    }

    /// Substitutes each `{name}` with the shell-quoted path.
    pub fn render(&self, vars: &[(&str, &Path)]) -> String {
        vars.iter()
            .fold(self.template.clone(), |cmd, (name, path)| {
                cmd.replace(
                    &format!("{{{name}}}"),
                    &shell_quote(&path.to_string_lossy()),
                )
            })
    }

    pub fn run(&self, vars: &[(&str, &Path)]) -> Result<()> {
        let cmd = self.render(vars);
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::External(format!("spawning `{cmd}`: {e}")))?;
        let start = Instant::now();
        loop {
            match child.try_wait() {
                Ok(Some(status)) if status.success() => return Ok(()),
                Ok(Some(status)) => {
                    return Err(Error::External(format!("`{cmd}` exited with {status}")))
                }
                Ok(None) if start.elapsed() > self.timeout => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::External(format!(
                        "`{cmd}` timed out after {:?}",
                        self.timeout
                    )));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
                Err(e) => return Err(Error::External(format!("waiting on `{cmd}`: {e}"))),
            }
        }
    }

    /// Runs the command and loads the image it wrote to `output`, which must have the
    /// requested dimensions.
    pub fn run_for_image(
        &self,
        vars: &[(&str, &Path)],
        output: &Path,
        width: u32,
        height: u32,
    ) -> Result<ImageBuffer> {
        self.run(vars)?;
        let img = load_image(output)
            .map_err(|e| Error::External(format!("reading reconstructor output: {e}")))?;
        if img.width() != width || img.height() != height {
            return Err(Error::External(format!(
                "reconstructor wrote {}x{}, expected {width}x{height}",
                img.width(),
                img.height()
            )));
        }
        Ok(img)
    }
}
