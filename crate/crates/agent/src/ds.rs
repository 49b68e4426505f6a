use fairhaven_core::platform::{DatasetSummary, TreeEntry};
use serde_json::{json, Value};

use crate::client::Api;
use crate::error::{AgentError, Result};

fn is_id(s: &str) -> bool {
    s.len() == 32 && s.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Accept a dataset id or a dataset name visible to the caller.
pub fn resolve(api: &Api, dataset: &str) -> Result<String> {
    if is_id(dataset) {
        return Ok(dataset.to_lowercase());
    }
    let all: Vec<DatasetSummary> = api.get("/v1/datasets")?;
    let hits: Vec<&DatasetSummary> = all.iter().filter(|d| d.name == dataset).collect();
    match hits.as_slice() {
        [one] => Ok(one.id.to_string()),
        [] => Err(AgentError::Local(format!("no dataset named {dataset:?}"))),
        _ => Err(AgentError::Local(format!("{dataset:?} names several datasets; use the id"))),
    }
}

pub fn tree(api: &Api, dataset: &str) -> Result<Vec<TreeEntry>> {
    api.get(&format!("/v1/datasets/{dataset}/tree"))
}

pub fn mutate(api: &Api, dataset: &str, op: Value) -> Result<Vec<TreeEntry>> {
    api.post(&format!("/v1/datasets/{dataset}/tree"), &op)
}

pub fn move_node(api: &Api, dataset: &str, target: &str, destination: &str) -> Result<Vec<TreeEntry>> {
    mutate(api, dataset, json!({"op": "move", "target": target, "destination": destination}))
}

pub fn rename(api: &Api, dataset: &str, target: &str, name: &str) -> Result<Vec<TreeEntry>> {
    mutate(api, dataset, json!({"op": "rename", "target": target, "name": name}))
}

pub fn remove(api: &Api, dataset: &str, target: &str) -> Result<Vec<TreeEntry>> {
    mutate(api, dataset, json!({"op": "soft_delete", "target": target}))
}

/// The dataset payload exactly as the server returns it.
pub fn show(api: &Api, dataset: &str) -> Result<Value> {
    api.get(&format!("/v1/datasets/{dataset}"))
}

pub fn set_status(api: &Api, dataset: &str, label: &str) -> Result<Value> {
    api.put(&format!("/v1/datasets/{dataset}/status"), &json!({ "label": label }))
}

pub fn format_tree(entries: &[TreeEntry]) -> String {
    let width = entries.iter().map(|e| e.path.len()).max().unwrap_or(0).max(4);
    let mut out = format!("{:<width$}  {:<6}  {:>12}\n", "PATH", "KIND", "SIZE");
    for e in entries {
        let kind = serde_json::to_value(e.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        out.push_str(&format!("{:<width$}  {:<6}  {:>12}\n", e.path, kind, e.size));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_tree_prints_only_the_header() {
        let text = format_tree(&[]);
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("PATH"));
    }

    #[test]
    fn ids_are_thirty_two_hex_characters() {
        assert!(is_id("0123456789abcdef0123456789ABCDEF"));
        assert!(!is_id("Study"));
    }
}
