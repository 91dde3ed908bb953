//! Run manifests: every command writes one next to its outputs so a run
//! can be replayed or compared. Two runs with identical manifests must
//! produce byte-identical output files, which is why there is no
//! timestamp field and the maps are ordered.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use pathmon::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    /// Input label (usually the path as given) to SHA-256 of its bytes.
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            parameters: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.into(), value.to_string());
        self
    }

    pub fn input(&mut self, label: impl Into<String>, bytes: &[u8]) -> &mut Self {
        self.input_hashes.insert(label.into(), sha256_hex(bytes));
        self
    }

    /// Serializes to `manifest.json` in `dir`.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::NumericalFailure(format!("manifest serialization: {e}")))?;
        text.push('\n');
        crate::emit::write_file(&path, &text)?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
