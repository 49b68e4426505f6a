use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use fairhaven_core::upload::{EntrySpec, MAX_FILE_SIZE};
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::{AgentError, Result};

/// Sent for files the server will refuse on size alone, so they are not hashed.
pub const OVERSIZE_CHECKSUM: &str = "0000000000000000000000000000000000000000000000000000000000000000";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalFile {
    pub rel: String,
    pub source: PathBuf,
    pub size: u64,
    pub checksum: String,
}

impl LocalFile {
    pub fn spec(&self) -> EntrySpec {
        EntrySpec {
            path: self.rel.clone(),
            size: self.size,
            checksum: self.checksum.clone(),
        }
    }
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

fn rel_string(path: &Path) -> String {
    path.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

fn describe(source: PathBuf, rel: String) -> Result<LocalFile> {
    let meta = std::fs::metadata(&source).map_err(|e| AgentError::Local(format!("{}: {e}", source.display())))?;
    let checksum = if meta.len() > MAX_FILE_SIZE {
        OVERSIZE_CHECKSUM.to_string()
    } else {
        sha256_file(&source).map_err(|e| AgentError::Local(format!("{}: {e}", source.display())))?
    };
    Ok(LocalFile {
        rel,
        source: source.canonicalize()?,
        size: meta.len(),
        checksum,
    })
}

/// Files named directly keep their file name; directories expand
/// recursively under their own name.
pub fn expand(paths: &[PathBuf]) -> Result<Vec<LocalFile>> {
    let mut out = Vec::new();
    for path in paths {
        let meta = std::fs::metadata(path).map_err(|e| AgentError::Local(format!("{}: {e}", path.display())))?;
        let name = path
            .canonicalize()?
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .ok_or_else(|| AgentError::Local(format!("{} has no name", path.display())))?;
        if meta.is_dir() {
            for entry in WalkDir::new(path).sort_by_file_name() {
                let entry = entry.map_err(|e| AgentError::Local(e.to_string()))?;
                if !entry.file_type().is_file() {
                    continue;
                }
                let inner = entry.path().strip_prefix(path).expect("walk stays under its root");
                out.push(describe(entry.path().to_path_buf(), format!("{name}/{}", rel_string(inner)))?);
            }
        } else {
            out.push(describe(path.clone(), name)?);
        }
    }
    let mut seen = BTreeSet::new();
    for f in &out {
        if !seen.insert(f.rel.as_str()) {
            return Err(AgentError::Local(format!("{} is named twice", f.rel)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directories_expand_under_their_name() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("session");
        std::fs::create_dir_all(root.join("eeg")).unwrap();
        std::fs::write(root.join("eeg/a.edf"), b"abc").unwrap();
        std::fs::write(root.join("notes.txt"), b"").unwrap();
        let single = dir.path().join("single.csv");
        std::fs::write(&single, b"x,y\n").unwrap();
        let files = expand(&[root, single]).unwrap();
        let rels: Vec<&str> = files.iter().map(|f| f.rel.as_str()).collect();
        assert_eq!(rels, ["session/eeg/a.edf", "session/notes.txt", "single.csv"]);
        assert_eq!(files[0].checksum, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(files[1].size, 0);
    }

    #[test]
    fn duplicates_and_missing_paths_are_local_errors() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("a.txt");
        std::fs::write(&f, b"1").unwrap();
        assert_eq!(expand(&[f.clone(), f]).unwrap_err().exit_code(), 1);
        assert_eq!(expand(&[dir.path().join("missing")]).unwrap_err().exit_code(), 1);
    }
}
