//! Run directories: the effective configuration, data files and a manifest
//! of SHA-256 content hashes. Everything is rendered in memory first, so a
//! failed computation leaves no partial output behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub struct RunOutput {
    command: &'static str,
    config: serde_json::Value,
    files: Vec<(String, Vec<u8>)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    files: BTreeMap<&'a str, FileEntry>,
}

#[derive(Serialize)]
struct FileEntry {
    bytes: usize,
    sha256: String,
}

pub fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("output serializes");
    v.push(b'\n');
    v
}

impl RunOutput {
    pub fn new<C: Serialize>(command: &'static str, config: &C) -> Self {
        Self {
            command,
            config: serde_json::to_value(config).expect("config serializes"),
            files: Vec::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, data: Vec<u8>) {
        self.files.push((name.into(), data));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.add(name, to_json(value));
    }

    /// Write `config.json`, the data files and `manifest.json` into `dir`.
    pub fn write(mut self, dir: &Path) -> CliResult<PathBuf> {
        let config = to_json(&serde_json::json!({
            "command": self.command,
            "config": self.config,
        }));
        self.files.insert(0, ("config.json".into(), config));
        let manifest = Manifest {
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            files: self
                .files
                .iter()
                .map(|(n, d)| {
                    (
                        n.as_str(),
                        FileEntry {
                            bytes: d.len(),
                            sha256: sha256_hex(d),
                        },
                    )
                })
                .collect(),
        };
        let manifest = to_json(&manifest);
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
        for (name, data) in self.files.iter().chain([&("manifest.json".to_string(), manifest)]) {
            let path = dir.join(name);
            std::fs::write(&path, data).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        }
        Ok(dir.to_path_buf())
    }
}
