use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Record written beside every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: &'a str,
    pub parameters: serde_json::Value,
    pub seed: u64,
    pub cutoff: usize,
    pub tail_tol: f64,
    pub tool_version: &'static str,
    pub timestamp: String,
}

pub struct OutDir {
    root: PathBuf,
    command: &'static str,
}

impl OutDir {
    pub fn new(root: &Path, command: &'static str) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            command,
        })
    }

    /// `<out-dir>/<command>.<suffix>`
    pub fn path(&self, suffix: &str) -> PathBuf {
        self.root.join(format!("{}.{suffix}", self.command))
    }

    pub fn write_bytes(&self, suffix: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(suffix);
        write_atomic(&path, bytes)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, suffix: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write_bytes(suffix, &text)
    }

    pub fn write_manifest(&self, parameters: serde_json::Value, seed: u64, cutoff: usize, tail_tol: f64) -> Result<PathBuf> {
        let m = RunManifest {
            command: self.command,
            parameters,
            seed,
            cutoff,
            tail_tol,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
        };
        self.write_json("manifest.json", &m)
    }
}

/// Write to a sibling temp file, then rename over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
