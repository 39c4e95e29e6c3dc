//! Output directory with a content-hash manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash over a sequence of labelled inputs, used as the dataset
/// fingerprint in reports.
pub fn fingerprint<'a>(parts: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> String {
    let mut h = Sha256::new();
    for (label, bytes) in parts {
        h.update((label.len() as u64).to_le_bytes());
        h.update(label.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub command: String,
    pub seed: u64,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> AppResult<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|e| AppError::io(&root, e))?;
        Ok(OutputDir { root, files: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `bytes` at `rel` (forward-slash separated) and records its hash.
    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> AppResult<()> {
        if rel == MANIFEST || rel.split('/').any(|c| c.is_empty() || c == "..") {
            return Err(AppError::Config(format!("invalid artifact path `{rel}`")));
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| AppError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| AppError::io(&path, e))?;
        self.files.insert(
            rel.to_string(),
            ManifestEntry { path: rel.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() as u64 },
        );
        Ok(())
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes `manifest.json` listing every artifact, sorted by path.
    pub fn finish(self, command: &str, seed: u64) -> AppResult<Manifest> {
        let manifest =
            Manifest { version: 1, command: command.to_string(), seed, files: self.files.into_values().collect() };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, text).map_err(|e| AppError::io(&path, e))?;
        Ok(manifest)
    }
}

pub fn read_manifest(dir: &Path) -> AppResult<Manifest> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(|e| AppError::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}
