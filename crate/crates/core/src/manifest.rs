//! Run manifests: everything that determines a pipeline run's outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::records::RecordError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Digest of every other field.
    pub run_id: String,
    pub command: String,
    pub tool_version: String,
    pub seed: u64,
    /// Path the vocabulary was read from, or `"builtin:toyvoc"`.
    pub vocab: String,
    pub vocab_sha256: String,
    /// Input file name → content digest.
    pub inputs: BTreeMap<String, String>,
    pub config: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String, RecordError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| RecordError::Io { path: path.display().to_string(), source })?;
    Ok(sha256_hex(&bytes))
}

impl RunManifest {
    pub fn new(
        command: &str,
        seed: u64,
        vocab: &str,
        vocab_sha256: &str,
        inputs: BTreeMap<String, String>,
        config: serde_json::Value,
    ) -> Self {
        let mut m = RunManifest {
            run_id: String::new(),
            command: command.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            seed,
            vocab: vocab.to_string(),
            vocab_sha256: vocab_sha256.to_string(),
            inputs,
            config,
        };
        m.run_id = m.digest()[..16].to_string();
        m
    }

    /// Digest of the manifest with `run_id` blanked. serde_json writes maps
    /// in key order here, so equal manifests hash equally.
    pub fn digest(&self) -> String {
        let mut blank = self.clone();
        blank.run_id.clear();
        sha256_hex(serde_json::to_string(&blank).expect("manifest serializes").as_bytes())
    }

    pub fn is_consistent(&self) -> bool {
        self.digest().starts_with(&self.run_id) && self.run_id.len() == 16
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_tracks_content() {
        let a = RunManifest::new("simulate", 1, "builtin:toyvoc", "ab", BTreeMap::new(), serde_json::json!({"n": 1}));
        let b = RunManifest::new("simulate", 1, "builtin:toyvoc", "ab", BTreeMap::new(), serde_json::json!({"n": 1}));
        let c = RunManifest::new("simulate", 2, "builtin:toyvoc", "ab", BTreeMap::new(), serde_json::json!({"n": 1}));
        assert_eq!(a, b);
        assert_ne!(a.run_id, c.run_id);
        assert!(a.is_consistent());
        let mut d = a.clone();
        d.seed = 3;
        assert!(!d.is_consistent());
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
