//! Loading versioned JSON configuration files.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

/// Schema version understood by this build.
pub const SCHEMA_VERSION: u64 = 1;

/// A parsed config together with the digest of its bytes.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub config: T,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Parses `bytes` as a JSON object, reports every missing field of
/// `required` at once, checks the schema version, then deserializes.
pub fn parse_config<T: DeserializeOwned>(bytes: &[u8], required: &[&str], origin: &str) -> AppResult<Loaded<T>> {
    let text = std::str::from_utf8(bytes).map_err(|e| AppError::Usage(format!("{origin}: not UTF-8: {e}")))?;
    let value: Value = if text.trim().is_empty() {
        Value::Object(Default::default())
    } else {
        serde_json::from_str(text)
            .map_err(|e| AppError::Usage(format!("{origin}: invalid JSON at line {}, column {}: {e}", e.line(), e.column())))?
    };
    let Value::Object(map) = &value else {
        return Err(AppError::Usage(format!("{origin}: top level must be a JSON object")));
    };
    let missing: Vec<&str> = required.iter().copied().filter(|k| !map.contains_key(*k)).collect();
    if !missing.is_empty() {
        return Err(AppError::Usage(format!(
            "{origin}: missing required field(s): {}",
            missing.join(", ")
        )));
    }
    match map.get("schema").and_then(Value::as_u64) {
        Some(SCHEMA_VERSION) => {}
        _ => {
            return Err(AppError::Usage(format!(
                "{origin}: field 'schema' must be {SCHEMA_VERSION}"
            )))
        }
    }
    let config = serde_json::from_str(text).map_err(|e| {
        AppError::Usage(format!("{origin}: line {}, column {}: {e}", e.line(), e.column()))
    })?;
    Ok(Loaded {
        config,
        sha256: sha256_hex(bytes),
    })
}

pub fn load_config<T: DeserializeOwned>(path: &Path, required: &[&str]) -> AppResult<Loaded<T>> {
    let bytes = std::fs::read(path).map_err(|e| AppError::Usage(format!("{}: {e}", path.display())))?;
    parse_config(&bytes, required, &path.display().to_string())
}
