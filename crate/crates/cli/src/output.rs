//! Provenance, config hashing and artifact writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use limitlens_core::report::Provenance;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Hex SHA-256 of the compact JSON form. Object keys are sorted, so equal
/// configs hash equally regardless of construction order.
pub fn config_hash(config: &Value) -> String {
    let digest = Sha256::digest(config.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn provenance(seed: u64, config: &Value) -> Provenance {
    Provenance {
        tool_version: TOOL_VERSION.to_string(),
        seed,
        config_hash: config_hash(config),
    }
}

/// A seed for one named consumer, derived from the run seed.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn meta_json(p: &Provenance) -> Value {
    json!({
        "tool_version": p.tool_version,
        "seed": p.seed,
        "config_hash": p.config_hash,
    })
}

/// `{"meta": ..., "result": ...}`, pretty-printed with a trailing newline.
pub fn json_document<T: Serialize>(p: &Provenance, result: &T) -> CliResult<String> {
    let doc = json!({ "meta": meta_json(p), "result": result });
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Usage(format!("cannot serialize result: {e}")))?;
    text.push('\n');
    Ok(text)
}

pub fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
        }
        _ => Ok(()),
    }
}

/// Writes through a sibling temporary file so readers never see a torn file.
pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    ensure_parent(path)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Writes to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> CliResult<()> {
    match path {
        Some(path) => write_file(path, contents),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(contents.as_bytes())
                .and_then(|()| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// `store.csv.gz` → `store.csv.gz.summary.json`.
pub fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
