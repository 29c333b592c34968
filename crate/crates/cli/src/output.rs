//! Writes data files into the output directory and records them in the
//! run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub duration_seconds: f64,
    pub config: RunConfig,
    /// Command-specific facts such as saturation counts or truncation.
    pub notes: BTreeMap<String, String>,
    pub files: Vec<FileRecord>,
}

pub const MANIFEST_NAME: &str = "manifest.toml";

pub struct Emitter {
    dir: PathBuf,
    files: Vec<FileRecord>,
    pub notes: BTreeMap<String, String>,
}

impl Emitter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            notes: BTreeMap::new(),
        })
    }

    /// Renders into memory, then writes and checksums the file.
    pub fn emit<F>(&mut self, name: &str, render: F) -> io::Result<()>
    where
        F: FnOnce(&mut Vec<u8>) -> io::Result<()>,
    {
        let mut buf = Vec::new();
        render(&mut buf)?;
        fs::write(self.dir.join(name), &buf)?;
        self.files.push(FileRecord {
            name: name.to_string(),
            bytes: buf.len() as u64,
            sha256: hex(&Sha256::digest(&buf)),
        });
        Ok(())
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.insert(key.to_string(), value.to_string());
    }

    pub fn finish(self, config: &RunConfig, elapsed: Duration) -> io::Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: elapsed.as_secs_f64(),
            config: config.clone(),
            notes: self.notes,
            files: self.files,
        };
        let text = toml::to_string(&manifest).expect("manifest serialises");
        fs::write(self.dir.join(MANIFEST_NAME), text)?;
        Ok(manifest)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
