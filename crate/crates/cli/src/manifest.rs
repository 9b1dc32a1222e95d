//! Provenance record written next to every artifact.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use crate::error::CliError;

pub const MANIFEST_VERSION: u32 = 1;

/// Content id of an artifact: `sha256:<hex>` of its bytes.
pub fn content_id(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn file_id(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(content_id(&bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the manifest's directory.
    pub path: String,
    pub kind: String,
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub tool_version: String,
    pub command: String,
    /// Id of the canonical JSON of the command's effective configuration.
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Ids of the input files (dataset, checkpoint, log, ...), by role.
    pub inputs: Vec<Artifact>,
    pub seeds: Vec<u64>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Self {
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        Self {
            version: MANIFEST_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_hash: content_id(&canonical),
            config,
            inputs: Vec::new(),
            seeds,
            artifacts: Vec::new(),
        }
    }

    fn entry(path: &Path, kind: &str) -> Result<Artifact, CliError> {
        Ok(Artifact {
            path: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            kind: kind.to_string(),
            id: file_id(path)?,
        })
    }

    pub fn input(mut self, path: &Path, role: &str) -> Result<Self, CliError> {
        self.inputs.push(Self::entry(path, role)?);
        Ok(self)
    }

    pub fn artifact(mut self, path: &Path, kind: &str) -> Result<Self, CliError> {
        self.artifacts.push(Self::entry(path, kind)?);
        Ok(self)
    }

    /// `<artifact>.manifest.json` next to the primary artifact.
    pub fn path_for(primary: &Path) -> PathBuf {
        let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        primary.with_file_name(name)
    }

    /// Writes the manifest next to the first artifact and returns its path.
    pub fn write_next_to(&self, primary: &Path) -> Result<PathBuf, CliError> {
        let path = Self::path_for(primary);
        let text = serde_json::to_string_pretty(self)? + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
