//! Run manifests and atomic artifact output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileDigest {
    /// Relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// `completed` or `diverged`.
    pub status: String,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Output files held in memory until the command succeeds, then written one by
/// one through a temporary file and an atomic rename. The manifest goes last.
#[derive(Debug)]
pub struct Artifacts {
    command: String,
    started_at: String,
    config_hash: Option<String>,
    seed: Option<u64>,
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn new(command: &str, config_hash: Option<String>, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            started_at: now(),
            config_hash,
            seed,
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn commit(self, dir: &Path, status: &str) -> Result<RunManifest, CliError> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        let mut files = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
            files.push(FileDigest {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(bytes),
            });
        }
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config_hash: self.config_hash,
            seed: self.seed,
            status: status.to_string(),
            started_at: self.started_at,
            finished_at: now(),
            files,
        };
        let mut json = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
        json.push(b'\n');
        write_atomic(&dir.join(MANIFEST_FILE), &json)?;
        Ok(manifest)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let fail = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

/// Mismatch found while verifying a manifest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Discrepancy {
    Missing(String),
    SizeMismatch { path: String, expected: u64, actual: u64 },
    DigestMismatch { path: String },
}

impl std::fmt::Display for Discrepancy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Discrepancy::Missing(p) => write!(f, "{p}: missing"),
            Discrepancy::SizeMismatch { path, expected, actual } => {
                write!(f, "{path}: expected {expected} bytes, found {actual}")
            }
            Discrepancy::DigestMismatch { path } => write!(f, "{path}: sha256 mismatch"),
        }
    }
}

/// Accepts a run directory or a manifest path.
pub fn manifest_location(path: &Path) -> (PathBuf, PathBuf) {
    if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        (path.parent().unwrap_or(Path::new(".")).to_path_buf(), path.to_path_buf())
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("malformed manifest {}: {e}", path.display())))
}

pub fn verify(dir: &Path, manifest: &RunManifest) -> Vec<Discrepancy> {
    let mut out = Vec::new();
    for f in &manifest.files {
        match fs::read(dir.join(&f.path)) {
            Err(_) => out.push(Discrepancy::Missing(f.path.clone())),
            Ok(bytes) if bytes.len() as u64 != f.bytes => out.push(Discrepancy::SizeMismatch {
                path: f.path.clone(),
                expected: f.bytes,
                actual: bytes.len() as u64,
            }),
            Ok(bytes) if sha256_hex(&bytes) != f.sha256 => {
                out.push(Discrepancy::DigestMismatch { path: f.path.clone() })
            }
            Ok(_) => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn commit_then_verify() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = Artifacts::new("test", None, Some(3));
        a.add("a.csv", b"x,y\n1,2\n".to_vec());
        a.add("b.txt", b"hello".to_vec());
        let m = a.commit(dir.path(), "completed").unwrap();
        assert_eq!(m.files.len(), 2);
        assert!(verify(dir.path(), &m).is_empty());
        let back = read_manifest(&dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(back, m);

        fs::write(dir.path().join("b.txt"), b"hellO").unwrap();
        assert_eq!(
            verify(dir.path(), &m),
            vec![Discrepancy::DigestMismatch { path: "b.txt".into() }]
        );
        fs::remove_file(dir.path().join("a.csv")).unwrap();
        assert_eq!(verify(dir.path(), &m)[0], Discrepancy::Missing("a.csv".into()));
    }
}
