//! Run manifests written next to every output as `<output>.manifest.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::CliError;
use crate::io::{sha256_file, sha256_hex, write_atomic};

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

impl InputRecord {
    pub fn hash(role: &str, path: &Path) -> Result<Self, CliError> {
        let sha256 = sha256_file(path)
            .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
        Ok(Self {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256,
        })
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

/// Manifest body. `manifest_hash` covers everything except `created_at`.
pub fn build(
    command: &str,
    config_hash: &str,
    resolved: Value,
    inputs: &[InputRecord],
    outputs: &[(PathBuf, Vec<u8>)],
    created_at: &str,
) -> Value {
    let outputs: Vec<Value> = outputs
        .iter()
        .map(|(path, bytes)| {
            json!({
                "file": path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                "sha256": sha256_hex(bytes),
            })
        })
        .collect();
    let mut body = json!({
        "tool": "topicforge",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config_hash": config_hash,
        "resolved_config": resolved,
        "inputs": inputs,
        "outputs": outputs,
    });
    let hash = sha256_hex(&serde_json::to_vec(&body).expect("json serializes"));
    let obj = body.as_object_mut().expect("object literal");
    obj.insert("manifest_hash".into(), Value::String(hash));
    obj.insert("created_at".into(), Value::String(created_at.to_string()));
    body
}

/// Writes every output atomically, then one manifest per output.
pub fn write_outputs(
    command: &str,
    config_hash: &str,
    resolved: Value,
    inputs: &[InputRecord],
    outputs: &[(PathBuf, Vec<u8>)],
) -> Result<(), CliError> {
    for (path, bytes) in outputs {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
        }
        write_atomic(path, bytes)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    let created_at = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let manifest = build(command, config_hash, resolved, inputs, outputs, &created_at);
    let mut text = serde_json::to_vec_pretty(&manifest).expect("json serializes");
    text.push(b'\n');
    for (path, _) in outputs {
        let mpath = manifest_path(path);
        write_atomic(&mpath, &text)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", mpath.display())))?;
    }
    Ok(())
}
