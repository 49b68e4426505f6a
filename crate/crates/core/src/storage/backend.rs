use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::{Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::id::sha256_hex;

use super::StoredObject;

/// Where object metadata and generation payloads live.
pub trait ObjectBackend: Send + Sync {
    fn load(&self) -> Result<Vec<StoredObject>>;
    fn save_meta(&self, object: &StoredObject) -> Result<()>;
    /// Truncate generation `generation` of `key` to `offset` and write `bytes` there.
    fn write_payload_at(&self, key: &str, generation: usize, offset: u64, bytes: &[u8]) -> Result<()>;
    fn read_payload(&self, key: &str, generation: usize) -> Result<Vec<u8>>;
    fn remove(&self, key: &str) -> Result<()>;
}

#[derive(Default)]
pub struct MemoryBackend {
    metas: Mutex<HashMap<String, StoredObject>>,
    payloads: Mutex<HashMap<(String, usize), Vec<u8>>>,
}

impl MemoryBackend {
    pub fn new() -> Self {
        Self::default()
    }
}

impl ObjectBackend for MemoryBackend {
    fn load(&self) -> Result<Vec<StoredObject>> {
        Ok(self.metas.lock().expect("poisoned").values().cloned().collect())
    }

    fn save_meta(&self, object: &StoredObject) -> Result<()> {
        self.metas
            .lock()
            .expect("poisoned")
            .insert(object.key.clone(), object.clone());
        Ok(())
    }

    fn write_payload_at(&self, key: &str, generation: usize, offset: u64, bytes: &[u8]) -> Result<()> {
        let mut payloads = self.payloads.lock().expect("poisoned");
        let buf = payloads.entry((key.to_string(), generation)).or_default();
        buf.resize(offset as usize, 0);
        buf.extend_from_slice(bytes);
        Ok(())
    }

    fn read_payload(&self, key: &str, generation: usize) -> Result<Vec<u8>> {
        self.payloads
            .lock()
            .expect("poisoned")
            .get(&(key.to_string(), generation))
            .cloned()
            .ok_or_else(|| Error::Persistence(format!("missing payload {key}#{generation}")))
    }

    fn remove(&self, key: &str) -> Result<()> {
        self.metas.lock().expect("poisoned").remove(key);
        self.payloads.lock().expect("poisoned").retain(|(k, _), _| k != key);
        Ok(())
    }
}

/// One directory per key, named by the SHA-256 of the key:
///
/// ```text
/// <root>/<sha256(key)>/meta.json
/// <root>/<sha256(key)>/gen-000000.bin
/// <root>/<sha256(key)>/gen-000001.bin
/// ```
pub struct FsBackend {
    root: PathBuf,
}

impl FsBackend {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root)?;
        Ok(FsBackend { root })
    }

    pub fn object_dir(&self, key: &str) -> PathBuf {
        self.root.join(sha256_hex(key.as_bytes()))
    }

    pub fn generation_path(&self, key: &str, generation: usize) -> PathBuf {
        self.object_dir(key).join(format!("gen-{generation:06}.bin"))
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl ObjectBackend for FsBackend {
    fn load(&self) -> Result<Vec<StoredObject>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.root)? {
            let meta = entry?.path().join("meta.json");
            if meta.is_file() {
                out.push(serde_json::from_slice(&fs::read(&meta)?)?);
            }
        }
        Ok(out)
    }

    fn save_meta(&self, object: &StoredObject) -> Result<()> {
        let dir = self.object_dir(&object.key);
        fs::create_dir_all(&dir)?;
        write_atomic(&dir.join("meta.json"), &serde_json::to_vec_pretty(object)?)
    }

    fn write_payload_at(&self, key: &str, generation: usize, offset: u64, bytes: &[u8]) -> Result<()> {
        fs::create_dir_all(self.object_dir(key))?;
        let mut file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(false)
            .open(self.generation_path(key, generation))?;
        file.set_len(offset)?;
        file.seek(SeekFrom::Start(offset))?;
        file.write_all(bytes)?;
        file.sync_data()?;
        Ok(())
    }

    fn read_payload(&self, key: &str, generation: usize) -> Result<Vec<u8>> {
        Ok(fs::read(self.generation_path(key, generation))?)
    }

    fn remove(&self, key: &str) -> Result<()> {
        let dir = self.object_dir(key);
        if dir.exists() {
            fs::remove_dir_all(dir)?;
        }
        Ok(())
    }
}
