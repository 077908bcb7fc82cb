//! Persistent response cache: one JSON record per line,
//! `{"k": <hex sha256>, "v": <output>, "t": <epoch seconds>}`.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path} line {line} is corrupt")]
    Corrupt { path: String, line: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub k: String,
    pub v: String,
    pub t: u64,
}

/// Stable content key over (provider kind, source language, target
/// language, input text). Each part is length-prefixed so distinct tuples
/// never serialize to the same byte string.
pub fn cache_key(provider: &str, source: &str, target: &str, text: &str) -> String {
    let mut h = Sha256::new();
    for part in [provider, source, target, text] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug)]
pub struct Cache {
    path: Option<PathBuf>,
    entries: RwLock<HashMap<String, String>>,
    writer: Mutex<Option<File>>,
}

impl Cache {
    pub fn in_memory() -> Cache {
        Cache { path: None, entries: RwLock::new(HashMap::new()), writer: Mutex::new(None) }
    }

    /// Opens (or creates) a cache file. A corrupt final line, left by an
    /// interrupted write, is cut off; corruption anywhere else is an error.
    pub fn open(path: &Path) -> Result<Cache, CacheError> {
        let io_err = |source| CacheError::Io { path: path.display().to_string(), source };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
        let mut entries = HashMap::new();
        let mut valid_len: u64 = 0;
        if path.exists() {
            let reader = BufReader::new(File::open(path).map_err(io_err)?);
            let mut pending_error: Option<usize> = None;
            for (i, line) in reader.split(b'\n').enumerate() {
                let raw = line.map_err(io_err)?;
                if let Some(line) = pending_error {
                    return Err(CacheError::Corrupt { path: path.display().to_string(), line });
                }
                let parsed = std::str::from_utf8(&raw).ok().and_then(|s| serde_json::from_str::<CacheEntry>(s).ok());
                match parsed {
                    Some(e) => {
                        entries.entry(e.k).or_insert(e.v);
                        valid_len += raw.len() as u64 + 1;
                    }
                    None if raw.iter().all(u8::is_ascii_whitespace) => valid_len += raw.len() as u64 + 1,
                    None => pending_error = Some(i + 1),
                }
            }
            let actual = fs::metadata(path).map_err(io_err)?.len();
            if valid_len.min(actual) < actual || pending_error.is_some() {
                log::warn!("{}: dropping truncated trailing cache record", path.display());
            }
            valid_len = valid_len.min(actual);
        }
        let mut file = OpenOptions::new().create(true).truncate(false).write(true).open(path).map_err(io_err)?;
        file.set_len(valid_len).map_err(io_err)?;
        file.seek(SeekFrom::End(0)).map_err(io_err)?;
        // A valid final record may lack its newline.
        if valid_len > 0 && fs::read(path).map_err(io_err)?.last() != Some(&b'\n') {
            file.write_all(b"\n").map_err(io_err)?;
        }
        Ok(Cache { path: Some(path.to_path_buf()), entries: RwLock::new(entries), writer: Mutex::new(Some(file)) })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().expect("cache lock poisoned").get(key).cloned()
    }

    /// Stores a value. An existing key keeps its first value.
    pub fn put(&self, key: &str, value: &str) -> Result<(), CacheError> {
        let mut writer = self.writer.lock().expect("cache writer poisoned");
        {
            let mut entries = self.entries.write().expect("cache lock poisoned");
            if entries.contains_key(key) {
                return Ok(());
            }
            entries.insert(key.to_string(), value.to_string());
        }
        if let Some(file) = writer.as_mut() {
            let t = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            let entry = CacheEntry { k: key.to_string(), v: value.to_string(), t };
            let mut line = serde_json::to_string(&entry).expect("cache entry serializes");
            line.push('\n');
            file.write_all(line.as_bytes()).map_err(|source| CacheError::Io {
                path: self.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default(),
                source,
            })?;
        }
        Ok(())
    }
}
