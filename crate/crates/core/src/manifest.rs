//! Output directory handling and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const OUT_DIR_ENV: &str = "BLANKGORDON_OUT_DIR";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Fully resolved parameters.
    pub config: serde_json::Value,
    /// SHA-256 of each tabulated input, keyed by path.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub pass: Option<bool>,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        RunManifest {
            command: command.to_string(),
            config,
            input_hashes: BTreeMap::new(),
            outputs: Vec::new(),
            pass: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn hash_input(&mut self, path: &Path) -> Result<()> {
        let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
        self.input_hashes
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// Writes `contents` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| io_error(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_error(path, e))
}

/// A run's output directory; every file written through it is listed in the
/// manifest, which is written last.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    pub manifest: RunManifest,
}

impl OutputDir {
    pub fn new(root: PathBuf, manifest: RunManifest) -> Self {
        OutputDir { root, manifest }
    }

    /// Root taken from the environment, `./out` when unset, plus `sub`.
    pub fn from_env(sub: &str, manifest: RunManifest) -> Self {
        let base = std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("out"));
        Self::new(base.join(sub), manifest)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.root.join(name);
        write_atomic(&path, contents.as_bytes())?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(path)
    }

    pub fn finish(mut self, pass: Option<bool>) -> Result<PathBuf> {
        self.manifest.pass = pass;
        let path = self.root.join(MANIFEST_FILE);
        let json =
            serde_json::to_string_pretty(&self.manifest).map_err(|e| Error::Io(e.to_string()))?;
        write_atomic(&path, (json + "\n").as_bytes())?;
        Ok(path)
    }
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
    fn manifest_lists_existing_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::new(
            dir.path().join("run"),
            RunManifest::new("test", serde_json::json!({"k": "1"})),
        );
        out.write("a.csv", "x\n1\n").unwrap();
        let m = out.finish(Some(true)).unwrap();
        let text = fs::read_to_string(&m).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for p in v["outputs"].as_array().unwrap() {
            assert!(Path::new(p.as_str().unwrap()).exists());
        }
        assert_eq!(v["pass"], true);
        assert!(!dir.path().join("run/manifest.json.tmp").exists());
    }
}
