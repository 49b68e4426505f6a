//! Folder/file tree of a dataset.
//!
//! Nodes are never removed: soft deletion stamps `soft_deleted_at` on a node
//! and its live descendants. Sibling names are unique among live nodes.

use std::collections::BTreeMap;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::id::Id;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Folder,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageNode {
    pub id: Id,
    pub kind: NodeKind,
    pub name: String,
    pub parent: Option<Id>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<Id>,
    #[serde(default)]
    pub size_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checksum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft_deleted_at: Option<DateTime<Utc>>,
}

impl PackageNode {
    pub fn is_live(&self) -> bool {
        self.soft_deleted_at.is_none()
    }

    pub fn is_folder(&self) -> bool {
        self.kind == NodeKind::Folder
    }
}

/// A live file together with its dataset-relative path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileListing {
    pub id: Id,
    pub path: String,
    pub size: u64,
    pub checksum: Option<String>,
    pub object_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tree {
    root: Id,
    nodes: BTreeMap<Id, PackageNode>,
}

pub fn validate_name(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::EmptyName);
    }
    if name == "." || name == ".." || name.contains('/') || name.contains('\\') {
        return Err(Error::InvalidArgument(format!("invalid node name {name:?}")));
    }
    Ok(())
}

/// Split a dataset-relative path into validated components.
pub fn split_path(path: &str) -> Result<Vec<&str>> {
    let trimmed = path.trim_matches('/');
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = trimmed.split('/').collect();
    for part in &parts {
        validate_name(part)
            .map_err(|_| Error::InvalidArgument(format!("invalid path {path:?}")))?;
    }
    Ok(parts)
}

impl Tree {
    pub fn new(root: Id) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            PackageNode {
                id: root,
                kind: NodeKind::Folder,
                name: String::new(),
                parent: None,
                children: Vec::new(),
                size_bytes: 0,
                checksum: None,
                object_key: None,
                soft_deleted_at: None,
            },
        );
        Tree { root, nodes }
    }

    pub fn root(&self) -> Id {
        self.root
    }

    pub fn node(&self, id: Id) -> Option<&PackageNode> {
        self.nodes.get(&id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &PackageNode> {
        self.nodes.values()
    }

    pub fn contains(&self, id: Id) -> bool {
        self.nodes.contains_key(&id)
    }

    fn live(&self, id: Id) -> Result<&PackageNode> {
        match self.nodes.get(&id) {
            Some(node) if node.is_live() => Ok(node),
            _ => Err(Error::NotFound(format!("node {id}"))),
        }
    }

    fn live_folder(&self, id: Id) -> Result<&PackageNode> {
        let node = self.live(id)?;
        if !node.is_folder() {
            return Err(Error::InvalidArgument(format!("{} is not a folder", self.path_of(id))));
        }
        Ok(node)
    }

    pub fn live_child_named(&self, folder: Id, name: &str) -> Option<Id> {
        self.nodes.get(&folder)?.children.iter().copied().find(|c| {
            let n = &self.nodes[c];
            n.is_live() && n.name == name
        })
    }

    /// Dataset-relative path; the root is the empty string.
    pub fn path_of(&self, id: Id) -> String {
        let mut parts = Vec::new();
        let mut cursor = self.nodes.get(&id);
        while let Some(node) = cursor {
            if node.parent.is_none() {
                break;
            }
            parts.push(node.name.as_str());
            cursor = node.parent.and_then(|p| self.nodes.get(&p));
        }
        parts.reverse();
        parts.join("/")
    }

    /// Resolve a path to a node. Live nodes win; with `include_deleted` the
    /// most recently deleted match is used when no live one exists.
    pub fn resolve(&self, path: &str, include_deleted: bool) -> Result<Id> {
        let mut current = self.root;
        for part in split_path(path)? {
            let node = &self.nodes[&current];
            let mut best: Option<&PackageNode> = None;
            for child in node.children.iter().map(|c| &self.nodes[c]) {
                if child.name != part || !(child.is_live() || include_deleted) {
                    continue;
                }
                best = match best {
                    None => Some(child),
                    Some(b) if b.is_live() => Some(b),
                    Some(_) if child.is_live() => Some(child),
                    Some(b) if child.soft_deleted_at > b.soft_deleted_at => Some(child),
                    Some(b) => Some(b),
                };
            }
            current = best
                .map(|n| n.id)
                .ok_or_else(|| Error::NotFound(format!("path {path:?}")))?;
        }
        Ok(current)
    }

    fn attach(&mut self, parent: Id, node: PackageNode) -> Id {
        let id = node.id;
        self.nodes.insert(id, node);
        self.nodes
            .get_mut(&parent)
            .expect("parent checked by caller")
            .children
            .push(id);
        id
    }

    pub fn create_folder(&mut self, parent: Id, name: &str, id: Id) -> Result<Id> {
        validate_name(name)?;
        self.live_folder(parent)?;
        if self.live_child_named(parent, name).is_some() {
            return Err(Error::SiblingConflict(name.to_string()));
        }
        Ok(self.attach(
            parent,
            PackageNode {
                id,
                kind: NodeKind::Folder,
                name: name.to_string(),
                parent: Some(parent),
                children: Vec::new(),
                size_bytes: 0,
                checksum: None,
                object_key: None,
                soft_deleted_at: None,
            },
        ))
    }

    pub fn add_file(
        &mut self,
        parent: Id,
        name: &str,
        id: Id,
        size: u64,
        checksum: String,
        object_key: String,
    ) -> Result<Id> {
        validate_name(name)?;
        self.live_folder(parent)?;
        if self.live_child_named(parent, name).is_some() {
            return Err(Error::SiblingConflict(name.to_string()));
        }
        Ok(self.attach(
            parent,
            PackageNode {
                id,
                kind: NodeKind::File,
                name: name.to_string(),
                parent: Some(parent),
                children: Vec::new(),
                size_bytes: size,
                checksum: Some(checksum),
                object_key: Some(object_key),
                soft_deleted_at: None,
            },
        ))
    }

    /// Replace the content descriptor of an existing live file.
    pub fn update_file(&mut self, id: Id, size: u64, checksum: String) -> Result<()> {
        self.live(id)?;
        let node = self.nodes.get_mut(&id).expect("checked");
        if node.is_folder() {
            return Err(Error::SiblingConflict(node.name.clone()));
        }
        node.size_bytes = size;
        node.checksum = Some(checksum);
        Ok(())
    }

    /// Walk `folders`, creating any missing ones with ids from `next_id`.
    pub fn ensure_folders(
        &mut self,
        folders: &[&str],
        mut next_id: impl FnMut() -> Id,
    ) -> Result<Id> {
        let mut current = self.root;
        for part in folders {
            current = match self.live_child_named(current, part) {
                Some(existing) if self.nodes[&existing].is_folder() => existing,
                Some(_) => return Err(Error::SiblingConflict(part.to_string())),
                None => self.create_folder(current, part, next_id())?,
            };
        }
        Ok(current)
    }

    pub fn rename(&mut self, target: Id, name: &str) -> Result<()> {
        validate_name(name)?;
        let node = self.live(target)?;
        let parent = node
            .parent
            .ok_or_else(|| Error::InvalidArgument("the root folder cannot be renamed".into()))?;
        if node.name == name {
            return Ok(());
        }
        if self.live_child_named(parent, name).is_some() {
            return Err(Error::SiblingConflict(name.to_string()));
        }
        self.nodes.get_mut(&target).expect("checked").name = name.to_string();
        Ok(())
    }

    fn is_within(&self, candidate: Id, ancestor: Id) -> bool {
        let mut cursor = Some(candidate);
        while let Some(id) = cursor {
            if id == ancestor {
                return true;
            }
            cursor = self.nodes.get(&id).and_then(|n| n.parent);
        }
        false
    }

    pub fn move_node(&mut self, target: Id, destination: Id) -> Result<()> {
        let node = self.live(target)?;
        let old_parent = node
            .parent
            .ok_or_else(|| Error::InvalidArgument("the root folder cannot be moved".into()))?;
        let name = node.name.clone();
        self.live_folder(destination)?;
        if self.is_within(destination, target) {
            return Err(Error::Cycle);
        }
        if old_parent == destination {
            return Ok(());
        }
        if self.live_child_named(destination, &name).is_some() {
            return Err(Error::SiblingConflict(name));
        }
        self.nodes
            .get_mut(&old_parent)
            .expect("parent exists")
            .children
            .retain(|c| *c != target);
        self.nodes
            .get_mut(&destination)
            .expect("checked")
            .children
            .push(target);
        self.nodes.get_mut(&target).expect("checked").parent = Some(destination);
        Ok(())
    }

    fn subtree(&self, id: Id) -> Vec<Id> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(next) = stack.pop() {
            out.push(next);
            stack.extend(self.nodes[&next].children.iter().rev());
        }
        out
    }

    /// Soft-delete `target` and its live descendants. Returns the affected ids.
    pub fn soft_delete(&mut self, target: Id, now: DateTime<Utc>) -> Result<Vec<Id>> {
        let node = self.live(target)?;
        if node.parent.is_none() {
            return Err(Error::InvalidArgument("the root folder cannot be deleted".into()));
        }
        let affected: Vec<Id> = self
            .subtree(target)
            .into_iter()
            .filter(|id| self.nodes[id].is_live())
            .collect();
        for id in &affected {
            self.nodes.get_mut(id).expect("in subtree").soft_deleted_at = Some(now);
        }
        Ok(affected)
    }

    /// Restore a soft-deleted node and the descendants deleted with it.
    pub fn undelete(&mut self, target: Id, now: DateTime<Utc>, window_days: i64) -> Result<Vec<Id>> {
        let node = self
            .nodes
            .get(&target)
            .ok_or_else(|| Error::NotFound(format!("node {target}")))?;
        let deleted_at = node
            .soft_deleted_at
            .ok_or_else(|| Error::InvalidArgument(format!("node {target} is not deleted")))?;
        if now - deleted_at > Duration::days(window_days) {
            return Err(Error::WindowExpired { days: window_days });
        }
        let parent = node.parent.expect("root is never deleted");
        self.live(parent)
            .map_err(|_| Error::InvalidArgument("parent folder is deleted".into()))?;
        if self.live_child_named(parent, &node.name).is_some() {
            return Err(Error::SiblingConflict(node.name.clone()));
        }
        let restored: Vec<Id> = self
            .subtree(target)
            .into_iter()
            .filter(|id| self.nodes[id].soft_deleted_at == Some(deleted_at))
            .collect();
        for id in &restored {
            self.nodes.get_mut(id).expect("in subtree").soft_deleted_at = None;
        }
        Ok(restored)
    }

    /// Ids of every live node, root included.
    pub fn live_ids(&self) -> Vec<Id> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[&id];
            if !node.is_live() {
                continue;
            }
            out.push(id);
            stack.extend(node.children.iter().rev());
        }
        out
    }

    /// Live files sorted by path.
    pub fn live_files(&self) -> Vec<FileListing> {
        let mut files: Vec<FileListing> = self
            .live_ids()
            .into_iter()
            .map(|id| &self.nodes[&id])
            .filter(|n| n.kind == NodeKind::File)
            .map(|n| FileListing {
                id: n.id,
                path: self.path_of(n.id),
                size: n.size_bytes,
                checksum: n.checksum.clone(),
                object_key: n.object_key.clone(),
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files
    }

    /// Check structural invariants; returns a description of the first violation.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let root = self.nodes.get(&self.root).ok_or("missing root")?;
        if root.parent.is_some() || !root.is_folder() || !root.is_live() {
            return Err("root must be a live folder without parent".into());
        }
        for node in self.nodes.values() {
            if node.kind == NodeKind::File && !node.children.is_empty() {
                return Err(format!("file {} has children", node.id));
            }
            if let Some(parent) = node.parent {
                let p = self.nodes.get(&parent).ok_or("dangling parent")?;
                if p.children.iter().filter(|c| **c == node.id).count() != 1 {
                    return Err(format!("node {} not listed exactly once by parent", node.id));
                }
                if node.is_live() && !p.is_live() {
                    return Err(format!("live node {} under deleted parent", node.id));
                }
            } else if node.id != self.root {
                return Err(format!("orphan node {}", node.id));
            }
            for child in &node.children {
                if self.nodes.get(child).and_then(|c| c.parent) != Some(node.id) {
                    return Err(format!("child {child} disagrees about its parent"));
                }
            }
            let mut names: Vec<&str> = node
                .children
                .iter()
                .map(|c| &self.nodes[c])
                .filter(|c| c.is_live())
                .map(|c| c.name.as_str())
                .collect();
            names.sort_unstable();
            if names.windows(2).any(|w| w[0] == w[1]) {
                return Err(format!("duplicate live sibling names under {}", node.id));
            }
        }
        // every node reachable from the root exactly once implies acyclic
        let reachable = self.subtree(self.root);
        if reachable.len() != self.nodes.len() {
            return Err("unreachable nodes or cycle".into());
        }
        Ok(())
    }
}
