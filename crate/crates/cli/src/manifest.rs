//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config: serde_json::Value,
    /// Path to hex SHA-256 of the content. Directories hash the sorted list
    /// of their files' relative paths and digests.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
}

pub struct ManifestBuilder {
    subcommand: String,
    started: Instant,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: Vec<PathBuf>,
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::from(aas_core::Error::io(path, e))
}

/// Content digest of a file, or of a directory tree.
pub fn digest_path(path: &Path) -> CliResult<String> {
    if path.is_dir() {
        let mut entries = Vec::new();
        collect_files(path, path, &mut entries)?;
        entries.sort();
        let mut hasher = Sha256::new();
        for (rel, digest) in entries {
            hasher.update(rel.as_bytes());
            hasher.update(b"\0");
            hasher.update(digest.as_bytes());
            hasher.update(b"\n");
        }
        Ok(hex::encode(hasher.finalize()))
    } else {
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<(String, String)>) -> CliResult<()> {
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path
                .strip_prefix(root)
                .unwrap_or(&path)
                .to_string_lossy()
                .replace('\\', "/");
            out.push((rel, digest_path(&path)?));
        }
    }
    Ok(())
}

/// `out.jsonl` → `out.jsonl.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".");
    name.push(suffix);
    path.with_file_name(name)
}

impl ManifestBuilder {
    pub fn new(subcommand: &str, config: impl Serialize) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            started: Instant::now(),
            config: serde_json::to_value(config).expect("config serialization"),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let digest = digest_path(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Writes the manifest next to `primary_output`.
    pub fn finish(self, primary_output: &Path) -> CliResult<PathBuf> {
        let mut outputs = BTreeMap::new();
        for path in &self.outputs {
            outputs.insert(path.display().to_string(), digest_path(path)?);
        }
        let manifest = RunManifest {
            subcommand: self.subcommand,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: self.config,
            inputs: self.inputs,
            outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = sibling(primary_output, "manifest.json");
        let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
        body.push('\n');
        aas_core::artifact::write_atomic(&path, body.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_digest_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("a"), "1").unwrap();
        fs::write(dir.path().join("sub/b"), "2").unwrap();
        let before = digest_path(dir.path()).unwrap();
        assert_eq!(before, digest_path(dir.path()).unwrap());
        fs::write(dir.path().join("sub/b"), "3").unwrap();
        assert_ne!(before, digest_path(dir.path()).unwrap());
    }

    #[test]
    fn sibling_appends_suffix() {
        assert_eq!(
            sibling(Path::new("/x/aas.jsonl"), "manifest.json"),
            PathBuf::from("/x/aas.jsonl.manifest.json")
        );
    }
}
