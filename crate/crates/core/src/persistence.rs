//! Artifact storage for caching and event callbacks for result sinks.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Keyed byte storage. Absent keys restore as `None`.
pub trait StorageProvider: Send + Sync {
    fn save(&self, key: &str, bytes: &[u8]) -> Result<()>;
    fn restore(&self, key: &str) -> Result<Option<Vec<u8>>>;
}

/// Files under a root directory, one per key.
#[derive(Debug, Clone)]
pub struct LocalStorage {
    root: PathBuf,
}

impl LocalStorage {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, key: &str) -> Result<PathBuf> {
        let rel = Path::new(key);
        let ok = !key.is_empty()
            && !key.contains('\\')
            && rel
                .components()
                .all(|c| matches!(c, Component::Normal(_)));
        if !ok {
            return Err(Error::PathTraversal(key.to_string()));
        }
        Ok(self.root.join(rel))
    }
}

impl StorageProvider for LocalStorage {
    fn save(&self, key: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path_for(key)?;
        atomic_write(&path, bytes)
    }

    fn restore(&self, key: &str) -> Result<Option<Vec<u8>>> {
        let path = self.path_for(key)?;
        match fs::read(&path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }
}

/// Writes through a uniquely named sibling temp file and renames it into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", uuid::Uuid::new_v4().simple()));
    let result = (|| {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

const MAGIC: &[u8; 4] = b"RKBA";
/// Bumped whenever the layout of a cached payload changes.
pub const ENVELOPE_VERSION: u16 = 1;

/// Wraps a payload as `magic | version | kind | length | payload | sha256`.
pub fn seal(kind: &str, payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(payload.len() + 64);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&ENVELOPE_VERSION.to_le_bytes());
    out.push(kind.len() as u8);
    out.extend_from_slice(kind.as_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(payload);
    out.extend_from_slice(&Sha256::digest(payload));
    out
}

/// Checks an envelope written by [`seal`] and returns its payload.
pub fn unseal(key: &str, kind: &str, bytes: &[u8]) -> Result<Vec<u8>> {
    let corrupt = |reason: &str| Error::CacheCorrupt {
        key: key.to_string(),
        reason: reason.to_string(),
    };
    let mut rest = bytes;
    let mut take = |n: usize| -> Result<&[u8]> {
        if rest.len() < n {
            return Err(corrupt("truncated envelope"));
        }
        let (head, tail) = rest.split_at(n);
        rest = tail;
        Ok(head)
    };
    if take(4)? != MAGIC {
        return Err(corrupt("bad magic bytes"));
    }
    let version = u16::from_le_bytes(take(2)?.try_into().unwrap());
    if version != ENVELOPE_VERSION {
        return Err(corrupt(&format!(
            "envelope version {version}, expected {ENVELOPE_VERSION}"
        )));
    }
    let kind_len = take(1)?[0] as usize;
    if take(kind_len)? != kind.as_bytes() {
        return Err(corrupt(&format!("artifact is not a {kind}")));
    }
    let len = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
    let payload = take(len)?.to_vec();
    let digest = take(32)?;
    if !rest.is_empty() {
        return Err(corrupt("trailing bytes"));
    }
    if digest != Sha256::digest(&payload).as_slice() {
        return Err(corrupt("checksum mismatch"));
    }
    Ok(payload)
}

/// Events delivered to callbacks during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    Config {
        config: serde_json::Value,
    },
    Metric {
        name: String,
        value: f64,
        #[serde(default)]
        tags: BTreeMap<String, String>,
    },
    Table {
        name: String,
        rows: Vec<serde_json::Value>,
    },
}

impl Event {
    pub fn metric(name: &str, value: f64, tags: &[(&str, String)]) -> Self {
        Event::Metric {
            name: name.to_string(),
            value,
            tags: tags.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        }
    }
}

/// Receives run events. Hooks default to doing nothing.
pub trait Callback: Send {
    fn on_config(&mut self, _config: &serde_json::Value) -> Result<()> {
        Ok(())
    }
    fn on_metric(&mut self, _name: &str, _value: f64, _tags: &BTreeMap<String, String>) -> Result<()> {
        Ok(())
    }
    fn on_table(&mut self, _name: &str, _rows: &[serde_json::Value]) -> Result<()> {
        Ok(())
    }
}

/// Registered callbacks, invoked in registration order.
#[derive(Default)]
pub struct Callbacks {
    sinks: Vec<Box<dyn Callback>>,
}

impl Callbacks {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, cb: Box<dyn Callback>) {
        self.sinks.push(cb);
    }

    pub fn len(&self) -> usize {
        self.sinks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sinks.is_empty()
    }

    /// Delivers `event` to every callback; failures are logged and skipped.
    pub fn emit(&mut self, event: &Event) {
        for (i, cb) in self.sinks.iter_mut().enumerate() {
            let result = match event {
                Event::Config { config } => cb.on_config(config),
                Event::Metric { name, value, tags } => cb.on_metric(name, *value, tags),
                Event::Table { name, rows } => cb.on_table(name, rows),
            };
            if let Err(e) = result {
                log::warn!("callback {i} failed: {e}");
            }
        }
    }
}

/// Appends every event as one JSON line.
pub struct JsonlCallback {
    path: PathBuf,
}

impl JsonlCallback {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    fn append(&self, event: &Event) -> Result<()> {
        if let Some(dir) = self.path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut line = serde_json::to_string(event)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path)?;
        f.write_all(line.as_bytes())?;
        Ok(())
    }
}

impl Callback for JsonlCallback {
    fn on_config(&mut self, config: &serde_json::Value) -> Result<()> {
        self.append(&Event::Config {
            config: config.clone(),
        })
    }

    fn on_metric(&mut self, name: &str, value: f64, tags: &BTreeMap<String, String>) -> Result<()> {
        self.append(&Event::Metric {
            name: name.to_string(),
            value,
            tags: tags.clone(),
        })
    }

    fn on_table(&mut self, name: &str, rows: &[serde_json::Value]) -> Result<()> {
        self.append(&Event::Table {
            name: name.to_string(),
            rows: rows.to_vec(),
        })
    }
}
