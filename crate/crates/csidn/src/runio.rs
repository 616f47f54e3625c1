//! Run persistence: JSON records with an embedded config and its hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

use crate::error::{Error, Result};
use crate::train::RunResult;

/// Record format version accepted by [`load_run`].
pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    /// The effective configuration of the run, embedded for exact reruns.
    pub config: serde_json::Value,
    /// SHA-256 of the canonical JSON serialization of `config`.
    pub config_hash: String,
    pub result: RunResult,
}

/// Canonical hash of any serializable config (sorted-key JSON, SHA-256 hex).
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let value = serde_json::to_value(config)?;
    let canonical = serde_json::to_string(&value)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(format!("{:x}", hasher.finalize()))
}

/// Write `result` (plus its config and hash) to `path`.
pub fn persist_run(result: &RunResult, config: &serde_json::Value, path: &Path) -> Result<()> {
    let hash = config_hash(config)?;
    let mut result = result.clone();
    result.config_hash = hash.clone();
    let record = RunRecord {
        schema_version: RUN_SCHEMA_VERSION,
        config: config.clone(),
        config_hash: hash,
        result,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let file = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &record)?;
    Ok(())
}

/// Load a run record, verifying the schema version and that the stored hash
/// matches the embedded config.
pub fn load_run(path: &Path) -> Result<RunRecord> {
    let file = std::fs::File::open(path)?;
    let record: RunRecord = serde_json::from_reader(std::io::BufReader::new(file))?;
    if record.schema_version != RUN_SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "run record version {} not supported (expected {RUN_SCHEMA_VERSION})",
            record.schema_version
        )));
    }
    let expected = config_hash(&record.config)?;
    if expected != record.config_hash {
        return Err(Error::Schema(format!(
            "config hash mismatch in {}: stored {}, recomputed {expected}",
            path.display(),
            record.config_hash
        )));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample_result() -> RunResult {
        RunResult {
            method: "naive".into(),
            seed: 3,
            config_hash: String::new(),
            train_loss: vec![1.0, 0.5],
            train_acc: vec![0.6, 0.8],
            test_acc: vec![0.55, 0.75],
            wall_time_s: 0.01,
            measured_noise_rate: Some(0.25),
            model_path: None,
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let config = json!({"method": "naive", "seed": 3});
        let result = sample_result();
        persist_run(&result, &config, &path).unwrap();
        let loaded = load_run(&path).unwrap();
        assert_eq!(loaded.result.train_loss, result.train_loss);
        assert_eq!(loaded.result.test_acc, result.test_acc);
        assert_eq!(loaded.config, config);
        assert_eq!(loaded.result.config_hash, loaded.config_hash);
    }

    #[test]
    fn tampered_hash_is_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        persist_run(&sample_result(), &json!({"seed": 3}), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let tampered = text.replace("\"seed\": 3", "\"seed\": 4");
        std::fs::write(&path, tampered).unwrap();
        assert!(matches!(load_run(&path).unwrap_err(), Error::Schema(_)));
    }

    #[test]
    fn hash_is_stable_across_key_order() {
        let a = json!({"b": 1, "a": 2});
        let b = json!({"a": 2, "b": 1});
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
    }
}
