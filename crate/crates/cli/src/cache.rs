//! Content-addressed result cache under `<out>/cache/`.
//!
//! Keys are sha256 digests of a canonical JSON description of everything
//! that determines the artifact (serde_json orders map keys, floats print
//! shortest-roundtrip, so equal inputs hash equally). A stored file that
//! fails to parse, or was written by a different format version, is
//! treated as a miss.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Bumped whenever any cached or emitted layout changes shape.
pub const FORMAT_VERSION: u32 = 1;

pub struct Cache {
    dir: Option<PathBuf>,
    hits: AtomicUsize,
    misses: AtomicUsize,
    tmp_counter: AtomicUsize,
}

#[derive(Serialize, serde::Deserialize)]
struct Envelope {
    format_version: u32,
    kind: String,
    key: serde_json::Value,
    value: serde_json::Value,
}

impl Cache {
    /// `enabled = false` yields a cache that neither reads nor writes.
    pub fn new(out_dir: &std::path::Path, enabled: bool) -> Result<Self> {
        let dir = if enabled {
            let d = out_dir.join("cache");
            std::fs::create_dir_all(&d)
                .map_err(|e| CliError::io(&format!("creating {}", d.display()), e))?;
            Some(d)
        } else {
            None
        };
        Ok(Cache {
            dir,
            hits: AtomicUsize::new(0),
            misses: AtomicUsize::new(0),
            tmp_counter: AtomicUsize::new(0),
        })
    }

    fn path_for(&self, kind: &str, key: &serde_json::Value) -> Option<PathBuf> {
        let dir = self.dir.as_ref()?;
        let tagged = serde_json::json!({
            "format_version": FORMAT_VERSION,
            "kind": kind,
            "key": key,
        });
        let digest = Sha256::digest(tagged.to_string().as_bytes());
        Some(dir.join(format!("{kind}-{}.json", hex::encode(digest))))
    }

    pub fn load<T: DeserializeOwned>(&self, kind: &str, key: &serde_json::Value) -> Option<T> {
        let path = self.path_for(kind, key)?;
        let parsed = std::fs::read_to_string(&path)
            .ok()
            .and_then(|text| serde_json::from_str::<Envelope>(&text).ok())
            .filter(|env| env.format_version == FORMAT_VERSION && env.kind == kind)
            .and_then(|env| serde_json::from_value::<T>(env.value).ok());
        match parsed {
            Some(v) => {
                self.hits.fetch_add(1, Ordering::Relaxed);
                Some(v)
            }
            None => {
                self.misses.fetch_add(1, Ordering::Relaxed);
                None
            }
        }
    }

    pub fn store<T: Serialize>(
        &self,
        kind: &str,
        key: &serde_json::Value,
        value: &T,
    ) -> Result<()> {
        let Some(path) = self.path_for(kind, key) else {
            return Ok(());
        };
        let env = Envelope {
            format_version: FORMAT_VERSION,
            kind: kind.to_string(),
            key: key.clone(),
            value: serde_json::to_value(value)
                .map_err(|e| CliError::config(format!("cache encode: {e}")))?,
        };
        let n = self.tmp_counter.fetch_add(1, Ordering::Relaxed);
        let tmp = path.with_extension(format!("tmp-{}-{n}", std::process::id()));
        let text = serde_json::to_string(&env)
            .map_err(|e| CliError::config(format!("cache encode: {e}")))?;
        std::fs::write(&tmp, text)
            .map_err(|e| CliError::io(&format!("writing {}", tmp.display()), e))?;
        std::fs::rename(&tmp, &path)
            .map_err(|e| CliError::io(&format!("publishing {}", path.display()), e))?;
        Ok(())
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> usize {
        self.misses.load(Ordering::Relaxed)
    }
}
