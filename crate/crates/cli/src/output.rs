//! Output files, float formatting and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use ergm_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Shortest round-trip representation, so reruns are byte-identical and parse
/// back exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Collects emitted files for the manifest.
pub struct Outputs {
    dir: Option<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self {
            dir,
            files: Vec::new(),
        }
    }

    /// Relative paths are placed under `--out` when it is given.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        match &self.dir {
            Some(d) if path.is_relative() => d.join(path),
            _ => path.to_path_buf(),
        }
    }

    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<PathBuf> {
        let full = self.resolve(path);
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)?;
            }
        }
        fs::write(&full, bytes)?;
        self.files.push(full.clone());
        Ok(full)
    }

    pub fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Internal(format!("serializing {}: {e}", path.display())))?;
        text.push('\n');
        self.write(path, text.as_bytes())
    }

    pub fn write_csv(
        &mut self,
        path: &Path,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<PathBuf> {
        let mut text = header.join(",");
        text.push('\n');
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        self.write(path, text.as_bytes())
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn files(&self) -> &[PathBuf] {
        &self.files
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Record of one invocation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<FileDigest>,
    /// SHA-256 over the `path:digest` lines of all outputs.
    pub digest: String,
}

pub fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

impl RunManifest {
    pub fn build(
        command_line: Vec<String>,
        config: serde_json::Value,
        seed: u64,
        started: f64,
        outputs: &Outputs,
    ) -> Result<Self> {
        let base = outputs.dir();
        let mut files = Vec::new();
        let mut all = Sha256::new();
        for f in outputs.files() {
            let shown = base
                .and_then(|b| f.strip_prefix(b).ok())
                .unwrap_or(f)
                .display()
                .to_string();
            let sha256 = sha256_file(f)?;
            all.update(format!("{shown}:{sha256}\n"));
            files.push(FileDigest {
                path: shown,
                sha256,
            });
        }
        Ok(Self {
            command_line,
            config,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished: now(),
            outputs: files,
            digest: hex::encode(all.finalize()),
        })
    }
}
