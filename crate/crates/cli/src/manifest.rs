//! Reproducibility manifest embedded in every result file.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest_sha256: String,
    pub timestamp_utc: String,
    pub rtol: f64,
    pub atol: f64,
    pub workers: usize,
}

impl RunManifest {
    pub fn new(config: &serde_json::Value, rtol: f64, atol: f64, workers: usize) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_digest_sha256: canonical_digest(config),
            timestamp_utc: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Micros, true),
            rtol,
            atol,
            workers,
        }
    }
}

/// SHA-256 over the canonical config bytes: JSON re-serialized compactly with
/// recursively sorted keys (serde_json's default map ordering).
pub fn canonical_digest(config: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(config).expect("json value serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
