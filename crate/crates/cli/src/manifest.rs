//! `manifest.json`: what ran, with which resolved settings, producing
//! which artifacts (by content digest). Wall time lives here and only
//! here — data files stay byte-reproducible.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::cache::{Cache, FORMAT_VERSION};
use crate::config::Resolved;
use crate::error::{CliError, Result};

pub struct ManifestBuilder {
    resolved_si: serde_json::Value,
    scenario: String,
    outputs: BTreeMap<String, String>,
    notes: BTreeMap<String, serde_json::Value>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(resolved: &Resolved) -> Self {
        ManifestBuilder {
            resolved_si: resolved.resolved_si_json(),
            scenario: resolved.scenario.as_str().to_string(),
            outputs: BTreeMap::new(),
            notes: BTreeMap::new(),
            started: Instant::now(),
        }
    }

    /// Record a finished output file: basename plus content digest.
    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::io(&format!("hashing {}", path.display()), e))?;
        let name = path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.outputs
            .insert(name, hex::encode(Sha256::digest(&bytes)));
        Ok(())
    }

    /// Free-form structured extras (assignment rule, dropped weight, ...).
    pub fn note(&mut self, key: &str, value: serde_json::Value) {
        self.notes.insert(key.to_string(), value);
    }

    pub fn write(self, out_dir: &Path, cache: &Cache) -> Result<()> {
        let doc = serde_json::json!({
            "scenario": self.scenario,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "format_version": FORMAT_VERSION,
            "resolved_si": self.resolved_si,
            "outputs": self.outputs,
            "notes": self.notes,
            "cache": {
                "hits": cache.hits(),
                "misses": cache.misses(),
            },
            "wall_time_s": self.started.elapsed().as_secs_f64(),
        });
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| CliError::config(format!("manifest encode: {e}")))?;
        std::fs::write(&path, text)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))
    }
}
