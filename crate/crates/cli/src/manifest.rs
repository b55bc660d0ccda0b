//! Run manifests: everything needed to repeat a command bit for bit.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ResolvedConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Analyze,
    Simulate,
    Sweep,
    Sensitivity,
}

/// An input file and the SHA-256 of its bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashedInput {
    pub path: PathBuf,
    pub sha256: String,
}

impl HashedInput {
    pub fn read(path: &Path) -> Result<(Self, Vec<u8>), CliError> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("cannot read {}", path.display()))
            .map_err(CliError::Input)?;
        let input = HashedInput {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        };
        Ok((input, bytes))
    }

    /// Re-reads the file and checks it is unchanged.
    pub fn verify(&self) -> Result<Vec<u8>, CliError> {
        let (now, bytes) = Self::read(&self.path)?;
        if now.sha256 != self.sha256 {
            return Err(CliError::Input(anyhow::anyhow!(
                "{} changed since the manifest was written (sha256 {} != {})",
                self.path.display(),
                now.sha256,
                self.sha256
            )));
        }
        Ok(bytes)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: Command,
    pub config: ResolvedConfig,
    pub circuit: HashedInput,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<HashedInput>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub durations: Option<HashedInput>,
    pub base_seed: u64,
    pub tool_version: String,
    /// Output file names, relative to the directory holding the manifest.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read manifest {}", path.display()))
            .map_err(CliError::Input)?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid manifest {}", path.display()))
            .map_err(CliError::Input)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        crate::write_file(&dir.join(MANIFEST_FILE), format!("{text}\n").as_bytes())
    }
}
