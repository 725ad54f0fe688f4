//! Content-addressed result cache.  Keys hash the engine version, the ring,
//! the raw scene bytes, and the command text, so a stale entry can never be
//! served across engine or scene edits.  Writes are atomic (temp file then
//! rename); a corrupt or unreadable entry is treated as a miss.

use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "MOTIVES_CACHE_DIR";

pub fn cache_dir(flag: Option<&Path>) -> PathBuf {
    if let Ok(dir) = std::env::var(CACHE_ENV) {
        if !dir.is_empty() {
            return PathBuf::from(dir);
        }
    }
    match flag {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(".motives-cache"),
    }
}

pub fn scene_digest(source: &str) -> String {
    let mut h = Sha256::new();
    h.update(source.as_bytes());
    hex(&h.finalize())
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: PathBuf) -> Self {
        Cache { dir }
    }

    fn key(&self, engine: &str, ring: &str, scene_source: &str, command: &str) -> String {
        let mut h = Sha256::new();
        h.update(engine.as_bytes());
        h.update([0]);
        h.update(ring.as_bytes());
        h.update([0]);
        h.update(scene_source.as_bytes());
        h.update([0]);
        h.update(command.as_bytes());
        hex(&h.finalize())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, engine: &str, ring: &str, scene_source: &str, command: &str) -> Option<Value> {
        let path = self.path_for(&self.key(engine, ring, scene_source, command));
        let bytes = std::fs::read(path).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    pub fn put(&self, engine: &str, ring: &str, scene_source: &str, command: &str, value: &Value) {
        let key = self.key(engine, ring, scene_source, command);
        let path = self.path_for(&key);
        if std::fs::create_dir_all(&self.dir).is_err() {
            return;
        }
        let tmp = self.dir.join(format!(".{key}.tmp"));
        let bytes = serde_json::to_vec(value).expect("cached value serializes");
        if std::fs::write(&tmp, bytes).is_ok() {
            let _ = std::fs::rename(&tmp, &path);
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
