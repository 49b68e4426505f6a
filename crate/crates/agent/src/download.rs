use std::path::{Component, Path, PathBuf};

use fairhaven_core::publishing::{DatasetVersion, SnapshotManifest};
use serde::Serialize;

use crate::client::Api;
use crate::error::{AgentError, Result};
use crate::scan::sha256_file;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DownloadSummary {
    pub dataset_id: String,
    pub version: u32,
    pub doi: String,
    pub files: usize,
    pub bytes: u64,
    pub dest: PathBuf,
}

/// `/published/<dataset>/<version>/manifest.json` to its dataset and version.
fn parse_location(location: &str) -> Result<(String, u32)> {
    let parts: Vec<&str> = location.trim_start_matches('/').split('/').collect();
    match parts.as_slice() {
        ["published", ds, v, ..] => Ok((
            ds.to_string(),
            v.trim_start_matches('v')
                .parse()
                .map_err(|_| AgentError::Local(format!("unexpected DOI target {location}")))?,
        )),
        _ => Err(AgentError::Local(format!("unexpected DOI target {location}"))),
    }
}

fn is_doi(target: &str) -> bool {
    target.starts_with("10.") && target.contains('/')
}

fn safe_join(dest: &Path, rel: &Path) -> Result<PathBuf> {
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(AgentError::Local(format!("refusing archive path {}", rel.display())));
    }
    Ok(dest.join(rel))
}

/// Check every file listed in `manifest.json` under `dest` against its digest.
pub fn verify_tree(dest: &Path) -> Result<SnapshotManifest> {
    let manifest: SnapshotManifest = serde_json::from_slice(&std::fs::read(dest.join("manifest.json"))?)?;
    let mut bad = Vec::new();
    for file in &manifest.files {
        let path = safe_join(&dest.join("files"), Path::new(&file.path))?;
        match sha256_file(&path) {
            Ok(sum) if sum == file.sha256 => {}
            Ok(sum) => bad.push(format!("{}: expected {} got {sum}", file.path, file.sha256)),
            Err(e) => bad.push(format!("{}: {e}", file.path)),
        }
    }
    if bad.is_empty() {
        Ok(manifest)
    } else {
        Err(AgentError::Verification(bad.join("; ")))
    }
}

pub fn download(api: &Api, target: &str, version: Option<u32>, dest: &Path) -> Result<DownloadSummary> {
    let (dataset, version) = if is_doi(target) {
        let (ds, v) = parse_location(&api.resolve_doi(target)?)?;
        (ds, version.unwrap_or(v))
    } else {
        let ds = target.to_string();
        let v = match version {
            Some(v) => v,
            None => {
                let versions: Vec<DatasetVersion> = api.get(&format!("/v1/datasets/{ds}/versions"))?;
                versions
                    .iter()
                    .map(|v| v.version)
                    .max()
                    .ok_or_else(|| AgentError::Local(format!("dataset {ds} has no version you can read")))?
            }
        };
        (ds, v)
    };
    let tar_bytes = api.bytes(&format!("/v1/datasets/{dataset}/versions/{version}/download"))?;
    std::fs::create_dir_all(dest)?;
    let mut archive = tar::Archive::new(tar_bytes.as_slice());
    let mut bytes = 0;
    for entry in archive.entries()? {
        let mut entry = entry?;
        let rel = entry.path()?.into_owned();
        let out = safe_join(dest, &rel)?;
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        bytes += entry.header().size()?;
        entry.unpack(&out)?;
    }
    let manifest = verify_tree(dest)?;
    Ok(DownloadSummary {
        dataset_id: dataset,
        version,
        doi: manifest.doi,
        files: manifest.files.len(),
        bytes,
        dest: dest.to_path_buf(),
    })
}
