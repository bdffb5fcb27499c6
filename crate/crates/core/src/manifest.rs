// SPDX-License-Identifier: Apache-2.0
//! Run manifests: what a run produced, with content hashes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("artifact {0} is listed but missing")]
    Missing(String),
    #[error("artifact {path} hash mismatch: manifest {expected}, file {actual}")]
    HashMismatch { path: String, expected: String, actual: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Pcap,
    Snapshot,
    Report,
    Manifest,
    Archive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the manifest's directory, `/`-separated.
    pub path: String,
    pub kind: ArtifactKind,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scenario: String,
    pub topology_file: String,
    pub scenario_file: String,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<String>,
    pub output_dir: String,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ManifestError + '_ {
    move |source| ManifestError::Io { path: path.to_path_buf(), source }
}

impl RunManifest {
    pub fn new(scenario: impl Into<String>, topology_file: impl Into<String>, scenario_file: impl Into<String>, seed: u64) -> Self {
        RunManifest {
            scenario: scenario.into(),
            topology_file: topology_file.into(),
            scenario_file: scenario_file.into(),
            seed,
            jitter: None,
            output_dir: ".".into(),
            artifacts: Vec::new(),
        }
    }

    /// Writes `bytes` to `dir/rel` and records it.
    pub fn add_file(&mut self, dir: &Path, rel: &str, kind: ArtifactKind, bytes: &[u8]) -> Result<(), ManifestError> {
        let path = dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        fs::write(&path, bytes).map_err(io_err(&path))?;
        self.artifacts.retain(|a| a.path != rel);
        self.artifacts.push(Artifact { path: rel.to_string(), kind, sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn artifacts_of(&self, kind: ArtifactKind) -> impl Iterator<Item = &Artifact> {
        self.artifacts.iter().filter(move |a| a.kind == kind)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, ManifestError> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(io_err(&path))?;
        Ok(path)
    }

    pub fn load(dir: &Path) -> Result<Self, ManifestError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|source| ManifestError::Json { path, source })
    }

    /// Checks that every artifact exists under `dir` with the recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<(), ManifestError> {
        for a in &self.artifacts {
            let bytes = fs::read(dir.join(&a.path)).map_err(|_| ManifestError::Missing(a.path.clone()))?;
            let actual = sha256_hex(&bytes);
            if actual != a.sha256 {
                return Err(ManifestError::HashMismatch { path: a.path.clone(), expected: a.sha256.clone(), actual });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn write_load_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::new("x", "t.toml", "s.xml", 0);
        m.add_file(dir.path(), "sub/a.pcap", ArtifactKind::Pcap, b"data").unwrap();
        m.write(dir.path()).unwrap();
        let back = RunManifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        back.verify(dir.path()).unwrap();
        fs::write(dir.path().join("sub/a.pcap"), b"tampered").unwrap();
        assert!(matches!(back.verify(dir.path()), Err(ManifestError::HashMismatch { .. })));
        fs::remove_file(dir.path().join("sub/a.pcap")).unwrap();
        assert!(matches!(back.verify(dir.path()), Err(ManifestError::Missing(_))));
    }
}
