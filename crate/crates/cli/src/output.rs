use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Provenance embedded in every artifact: enough to rerun the command.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub config: Value,
}

impl Metadata {
    pub fn new(command: &'static str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            config: serde_json::to_value(config)?,
        })
    }
}

/// An artifact body with its metadata attached as a top-level `metadata` key.
#[derive(Serialize)]
pub struct Artifact<'a, T: Serialize> {
    #[serde(flatten)]
    pub body: &'a T,
    pub metadata: &'a Metadata,
}

pub struct OutputDir {
    dir: PathBuf,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `body` plus metadata as pretty JSON and returns the rendered text.
    pub fn json<T: Serialize>(&self, name: &str, body: &T, meta: &Metadata) -> Result<String> {
        let text = serde_json::to_string_pretty(&Artifact { body, metadata: meta })?;
        let path = self.path(name);
        fs::write(&path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))?;
        Ok(text)
    }

    /// Writes a CSV through `write` and its metadata to a `.meta.json` sidecar.
    pub fn csv(
        &self,
        name: &str,
        meta: &Metadata,
        write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<PathBuf> {
        let path = self.path(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut out = BufWriter::new(file);
        write(&mut out).with_context(|| format!("writing {}", path.display()))?;
        out.flush()?;
        let sidecar = path.with_extension("meta.json");
        fs::write(&sidecar, serde_json::to_string_pretty(meta)? + "\n")
            .with_context(|| format!("writing {}", sidecar.display()))?;
        Ok(path)
    }
}

/// Writes to stdout; a reader closing the pipe early is not an error.
pub fn emit(write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match write(&mut out).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
