use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{PlatformState, Platform};
use crate::access::Action;
use crate::dataset::ActivityAction;
use crate::error::{Error, Result};
use crate::graph::{ModelSchema, Predicate, Record, Relationship, SchemaInput, Traversal};
use crate::id::Id;
use crate::tree::NodeKind;

/// A file addressed by node id or dataset-relative path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FileRef {
    Id { file_id: Id },
    Path { path: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkSpec {
    RecordRecord { name: String, from: Id, to: Id },
    RecordFile { record: Id, file: FileRef },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LinkOutcome {
    Relationship { relationship: Relationship, created: bool },
    Record { record: Record, created: bool },
}

/// Node/edge listing of a dataset's graph for visualization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDump {
    pub models: Vec<ModelSchema>,
    pub records: Vec<Record>,
    pub relationships: Vec<Relationship>,
}

fn dataset_of_model(state: &PlatformState, model: Id) -> Result<Id> {
    state
        .datasets
        .values()
        .find(|r| !r.dataset.deleted && r.graph.model(model).is_some())
        .map(|r| r.dataset.id)
        .ok_or_else(|| Error::NotFound(format!("model {model}")))
}

/// Records in another dataset are a CrossDataset error; unknown ones NotFound.
fn local_record(state: &PlatformState, dataset: Id, record: Id) -> Result<()> {
    if state.record(dataset)?.graph.record(record).is_some() {
        return Ok(());
    }
    if state.datasets.values().any(|r| r.graph.record(record).is_some()) {
        return Err(Error::CrossDataset);
    }
    Err(Error::NotFound(format!("record {record}")))
}

impl Platform {
    pub fn define_model(&self, dataset: Id, caller: Id, schema: &SchemaInput) -> Result<ModelSchema> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::EditMetadata)?;
            txn.state.ensure_unlocked(dataset)?;
            let id = txn.new_id();
            let model = txn.state.record_mut(dataset)?.graph.define_model(id, dataset, schema)?.clone();
            txn.log(dataset, caller, ActivityAction::RecordChanged, format!("defined model {:?}", model.name))?;
            Ok(model)
        })
    }

    pub fn models(&self, dataset: Id, caller: Id) -> Result<Vec<ModelSchema>> {
        let state = self.read();
        Ok(state
            .authorized(dataset, caller, Action::ViewFiles)?
            .graph
            .models()
            .cloned()
            .collect())
    }

    pub fn create_record(&self, model: Id, caller: Id, values: &serde_json::Map<String, Value>) -> Result<Record> {
        self.write(|txn| {
            let dataset = dataset_of_model(txn.state, model)?;
            txn.state.authorized(dataset, caller, Action::EditMetadata)?;
            txn.state.ensure_unlocked(dataset)?;
            let id = txn.new_id();
            let graph = &mut txn.state.record_mut(dataset)?.graph;
            let record = graph.create_record(id, model, values)?.clone();
            let name = graph.model(model).map(|m| m.name.clone()).unwrap_or_default();
            txn.log(dataset, caller, ActivityAction::RecordChanged, format!("created {name} record {id}"))?;
            Ok(record)
        })
    }

    pub fn link(&self, dataset: Id, caller: Id, spec: &LinkSpec) -> Result<LinkOutcome> {
        self.write(|txn| {
            txn.state.authorized(dataset, caller, Action::EditMetadata)?;
            txn.state.ensure_unlocked(dataset)?;
            match spec {
                LinkSpec::RecordRecord { name, from, to } => {
                    local_record(txn.state, dataset, *from)?;
                    local_record(txn.state, dataset, *to)?;
                    let id = txn.new_id();
                    let (relationship, created) =
                        txn.state.record_mut(dataset)?.graph.relate(id, name.trim(), *from, *to)?;
                    if created {
                        txn.log(
                            dataset,
                            caller,
                            ActivityAction::RecordChanged,
                            format!("linked {from} -[{}]-> {to}", relationship.name),
                        )?;
                    }
                    Ok(LinkOutcome::Relationship { relationship, created })
                }
                LinkSpec::RecordFile { record, file } => {
                    local_record(txn.state, dataset, *record)?;
                    let rec = txn.state.record_mut(dataset)?;
                    let tree = &rec.dataset.tree;
                    let node = match file {
                        FileRef::Path { path } => tree.resolve(path, false)?,
                        FileRef::Id { file_id } => *file_id,
                    };
                    match tree.node(node) {
                        Some(n) if n.is_live() && n.kind == NodeKind::File => {}
                        _ => return Err(Error::NotFound(format!("live file {node}"))),
                    }
                    let created = rec.graph.link_file(*record, node)?;
                    let path = rec.dataset.tree.path_of(node);
                    let record_out = rec.graph.record(*record).cloned().expect("linked");
                    if created {
                        txn.log(dataset, caller, ActivityAction::RecordChanged, format!("linked {record} to file {path}"))?;
                    }
                    Ok(LinkOutcome::Record { record: record_out, created })
                }
            }
        })
    }

    pub fn query_records(
        &self,
        dataset: Id,
        caller: Id,
        model_name: &str,
        predicates: &[Predicate],
        traverse: Option<&Traversal>,
    ) -> Result<Vec<Record>> {
        let state = self.read();
        let record = state.authorized(dataset, caller, Action::ViewFiles)?;
        Ok(record
            .graph
            .query(model_name, predicates, traverse)?
            .into_iter()
            .cloned()
            .collect())
    }

    /// Tables exactly as published under `metadata/`.
    pub fn serialize_graph(&self, dataset: Id, caller: Id) -> Result<BTreeMap<String, Vec<u8>>> {
        let state = self.read();
        let record = state.authorized(dataset, caller, Action::ViewFiles)?;
        Ok(serialize_record_graph(record))
    }

    pub fn graph_dump(&self, dataset: Id, caller: Id) -> Result<GraphDump> {
        let state = self.read();
        let g = &state.authorized(dataset, caller, Action::ViewFiles)?.graph;
        Ok(GraphDump {
            models: g.models().cloned().collect(),
            records: g.records().cloned().collect(),
            relationships: g.relationships().cloned().collect(),
        })
    }
}

pub(crate) fn serialize_record_graph(record: &super::DatasetRecord) -> BTreeMap<String, Vec<u8>> {
    let tree = &record.dataset.tree;
    record.graph.serialize(|id| {
        tree.node(id)
            .filter(|n| n.is_live())
            .map(|_| tree.path_of(id))
    })
}
