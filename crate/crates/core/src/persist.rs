//! Where platform state is kept between restarts.

use std::fs;
use std::path::PathBuf;
use std::sync::Mutex;

use crate::error::Result;

pub trait StateBackend: Send + Sync {
    fn load(&self) -> Result<Option<Vec<u8>>>;
    fn save(&self, bytes: &[u8]) -> Result<()>;
}

/// Keeps the latest snapshot in memory; for tests.
#[derive(Debug, Default)]
pub struct MemoryState {
    bytes: Mutex<Option<Vec<u8>>>,
}

impl MemoryState {
    pub fn new() -> Self {
        Self::default()
    }
}

impl StateBackend for MemoryState {
    fn load(&self) -> Result<Option<Vec<u8>>> {
        Ok(self.bytes.lock().expect("poisoned").clone())
    }

    fn save(&self, bytes: &[u8]) -> Result<()> {
        *self.bytes.lock().expect("poisoned") = Some(bytes.to_vec());
        Ok(())
    }
}

/// Single JSON file, replaced atomically on every save.
#[derive(Debug)]
pub struct FileState {
    path: PathBuf,
}

impl FileState {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        FileState { path: path.into() }
    }
}

impl StateBackend for FileState {
    fn load(&self) -> Result<Option<Vec<u8>>> {
        match fs::read(&self.path) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    fn save(&self, bytes: &[u8]) -> Result<()> {
        if let Some(parent) = self.path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = self.path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }
}
