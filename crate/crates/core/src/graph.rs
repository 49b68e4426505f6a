//! Custom-schema metadata graph: models, records, named relationships and
//! record-to-file links, plus the tabular form used in published snapshots.
//!
//! Tabular layout, one CSV per model plus two edge tables:
//!
//! ```text
//! metadata/<model_slug>.csv     id,<property>,...   (schema order)
//! metadata/relationships.csv    id,name,from,to
//! metadata/file_links.csv       record_id,file_path
//! ```
//!
//! Rows are sorted by id, fields quoted only when needed, lines end in CRLF.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::id::Id;

pub const RELATIONSHIPS_FILE: &str = "metadata/relationships.csv";
pub const FILE_LINKS_FILE: &str = "metadata/file_links.csv";
const RESERVED_SLUGS: [&str; 2] = ["relationships", "file_links"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum PropertyType {
    String,
    Integer,
    Number,
    Boolean,
    Date,
    Enum { values: Vec<String> },
}

impl PropertyType {
    fn label(&self) -> &'static str {
        match self {
            PropertyType::String => "string",
            PropertyType::Integer => "integer",
            PropertyType::Number => "number",
            PropertyType::Boolean => "boolean",
            PropertyType::Date => "date",
            PropertyType::Enum { .. } => "enum",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: PropertyType,
    #[serde(default)]
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSchema {
    pub id: Id,
    pub dataset_id: Id,
    pub name: String,
    pub properties: Vec<PropertyDef>,
}

impl ModelSchema {
    pub fn slug(&self) -> String {
        slugify(&self.name)
    }

    pub fn file_name(&self) -> String {
        format!("metadata/{}.csv", self.slug())
    }

    pub fn property(&self, name: &str) -> Option<&PropertyDef> {
        self.properties.iter().find(|p| p.name == name)
    }
}

/// Client-supplied model definition. Types arrive as free text so that an
/// unknown type is reported as a schema error rather than a parse failure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaInput {
    pub name: String,
    pub properties: Vec<PropertyInput>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyInput {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<String>>,
    #[serde(default)]
    pub required: bool,
}

impl PropertyInput {
    pub fn new(name: &str, kind: &str, required: bool) -> Self {
        PropertyInput {
            name: name.to_string(),
            kind: kind.to_string(),
            values: None,
            required,
        }
    }

    pub fn enumeration(name: &str, values: &[&str], required: bool) -> Self {
        PropertyInput {
            name: name.to_string(),
            kind: "enum".to_string(),
            values: Some(values.iter().map(|v| v.to_string()).collect()),
            required,
        }
    }
}

pub fn slugify(name: &str) -> String {
    name.trim().to_lowercase().replace(' ', "_")
}

impl SchemaInput {
    pub fn validate(&self) -> Result<Vec<PropertyDef>> {
        let slug = slugify(&self.name);
        if slug.is_empty() {
            return Err(Error::EmptyName);
        }
        if slug.starts_with('.') || slug.contains('/') || slug.contains('\\') {
            return Err(Error::InvalidSchema(format!("model name {:?} is not usable as a file name", self.name)));
        }
        if RESERVED_SLUGS.contains(&slug.as_str()) {
            return Err(Error::NameConflict(self.name.clone()));
        }
        if self.properties.is_empty() {
            return Err(Error::InvalidSchema("a model needs at least one property".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(self.properties.len());
        for prop in &self.properties {
            if prop.name.trim().is_empty() {
                return Err(Error::InvalidSchema("empty property name".into()));
            }
            if prop.name == "id" {
                return Err(Error::InvalidSchema("property name \"id\" is reserved".into()));
            }
            if !seen.insert(prop.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate property {:?}", prop.name)));
            }
            let kind = match prop.kind.as_str() {
                "string" => PropertyType::String,
                "integer" => PropertyType::Integer,
                "number" => PropertyType::Number,
                "boolean" => PropertyType::Boolean,
                "date" => PropertyType::Date,
                "enum" => {
                    let values = prop.values.clone().unwrap_or_default();
                    let distinct: BTreeSet<&String> = values.iter().collect();
                    if values.is_empty()
                        || values.iter().any(|v| v.is_empty())
                        || distinct.len() != values.len()
                    {
                        return Err(Error::InvalidSchema(format!(
                            "enum property {:?} needs distinct non-empty values",
                            prop.name
                        )));
                    }
                    PropertyType::Enum { values }
                }
                other => {
                    return Err(Error::InvalidSchema(format!("unknown property type {other:?}")))
                }
            };
            out.push(PropertyDef {
                name: prop.name.clone(),
                kind,
                required: prop.required,
            });
        }
        Ok(out)
    }
}

/// A typed property value. String and enum properties both hold `Text`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropertyValue {
    Text(String),
    Integer(i64),
    Number(f64),
    Boolean(bool),
    Date(NaiveDate),
}

impl PropertyValue {
    pub fn to_json(&self) -> Value {
        match self {
            PropertyValue::Text(s) => Value::String(s.clone()),
            PropertyValue::Integer(i) => Value::from(*i),
            PropertyValue::Number(n) => Value::from(*n),
            PropertyValue::Boolean(b) => Value::Bool(*b),
            PropertyValue::Date(d) => Value::String(d.format("%Y-%m-%d").to_string()),
        }
    }

    fn to_cell(&self) -> String {
        match self {
            PropertyValue::Text(s) => s.clone(),
            PropertyValue::Integer(i) => i.to_string(),
            PropertyValue::Number(n) => n.to_string(),
            PropertyValue::Boolean(b) => b.to_string(),
            PropertyValue::Date(d) => d.format("%Y-%m-%d").to_string(),
        }
    }

    fn from_cell(kind: &PropertyType, cell: &str) -> Option<PropertyValue> {
        match kind {
            PropertyType::String => Some(PropertyValue::Text(cell.to_string())),
            PropertyType::Enum { values } => values
                .iter()
                .any(|v| v == cell)
                .then(|| PropertyValue::Text(cell.to_string())),
            PropertyType::Integer => cell.parse().ok().map(PropertyValue::Integer),
            PropertyType::Number => cell
                .parse::<f64>()
                .ok()
                .filter(|n| n.is_finite())
                .map(PropertyValue::Number),
            PropertyType::Boolean => match cell {
                "true" => Some(PropertyValue::Boolean(true)),
                "false" => Some(PropertyValue::Boolean(false)),
                _ => None,
            },
            PropertyType::Date => NaiveDate::parse_from_str(cell, "%Y-%m-%d")
                .ok()
                .map(PropertyValue::Date),
        }
    }
}

/// Convert a JSON value to a typed value for `kind`.
///
/// `Ok(None)` means absent: JSON null and empty strings are both treated as
/// no value, since the tabular form cannot tell them apart.
pub fn coerce(kind: &PropertyType, value: &Value) -> std::result::Result<Option<PropertyValue>, ()> {
    match (kind, value) {
        (_, Value::Null) => Ok(None),
        (PropertyType::String, Value::String(s)) => {
            Ok((!s.is_empty()).then(|| PropertyValue::Text(s.clone())))
        }
        (PropertyType::Enum { values }, Value::String(s)) => {
            if s.is_empty() {
                Ok(None)
            } else if values.contains(s) {
                Ok(Some(PropertyValue::Text(s.clone())))
            } else {
                Err(())
            }
        }
        (PropertyType::Integer, Value::Number(n)) => {
            n.as_i64().map(|i| Some(PropertyValue::Integer(i))).ok_or(())
        }
        (PropertyType::Number, Value::Number(n)) => n
            .as_f64()
            .filter(|f| f.is_finite())
            .map(|f| Some(PropertyValue::Number(f)))
            .ok_or(()),
        (PropertyType::Boolean, Value::Bool(b)) => Ok(Some(PropertyValue::Boolean(*b))),
        (PropertyType::Date, Value::String(s)) => NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(|d| Some(PropertyValue::Date(d)))
            .map_err(|_| ()),
        _ => Err(()),
    }
}

/// Validate `values` against `schema`, listing every offending property.
pub fn conform(
    schema: &ModelSchema,
    values: &serde_json::Map<String, Value>,
) -> Result<BTreeMap<String, PropertyValue>> {
    let mut out = BTreeMap::new();
    let mut violations = Vec::new();
    for prop in &schema.properties {
        match values.get(&prop.name).map(|v| coerce(&prop.kind, v)) {
            None | Some(Ok(None)) => {
                if prop.required {
                    violations.push(prop.name.clone());
                }
            }
            Some(Ok(Some(v))) => {
                out.insert(prop.name.clone(), v);
            }
            Some(Err(())) => violations.push(prop.name.clone()),
        }
    }
    let mut unknown: Vec<String> = values
        .keys()
        .filter(|k| schema.property(k).is_none())
        .cloned()
        .collect();
    unknown.sort();
    violations.extend(unknown);
    if violations.is_empty() {
        Ok(out)
    } else {
        Err(Error::SchemaViolation(violations))
    }
}

fn conforms(schema: &ModelSchema, values: &BTreeMap<String, PropertyValue>) -> bool {
    let kind_ok = |kind: &PropertyType, v: &PropertyValue| match (kind, v) {
        (PropertyType::String, PropertyValue::Text(s)) => !s.is_empty(),
        (PropertyType::Enum { values }, PropertyValue::Text(s)) => values.contains(s),
        (PropertyType::Integer, PropertyValue::Integer(_)) => true,
        (PropertyType::Number, PropertyValue::Number(n)) => n.is_finite(),
        (PropertyType::Boolean, PropertyValue::Boolean(_)) => true,
        (PropertyType::Date, PropertyValue::Date(_)) => true,
        _ => false,
    };
    values.keys().all(|k| schema.property(k).is_some())
        && schema.properties.iter().all(|p| match values.get(&p.name) {
            Some(v) => kind_ok(&p.kind, v),
            None => !p.required,
        })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub id: Id,
    pub model_id: Id,
    pub values: BTreeMap<String, PropertyValue>,
    #[serde(default)]
    pub file_links: BTreeSet<Id>,
}

impl Record {
    /// Values as a plain JSON object.
    pub fn values_json(&self) -> serde_json::Map<String, Value> {
        self.values
            .iter()
            .map(|(k, v)| (k.clone(), v.to_json()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub id: Id,
    pub name: String,
    pub from_record: Id,
    pub to_record: Id,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateOp {
    Eq,
    Lt,
    Gt,
    Contains,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate {
    pub property: String,
    pub op: PredicateOp,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Traversal {
    pub relationship_name: String,
    pub target_model: String,
}

fn compare(a: &PropertyValue, b: &PropertyValue) -> Option<std::cmp::Ordering> {
    match (a, b) {
        (PropertyValue::Text(x), PropertyValue::Text(y)) => Some(x.cmp(y)),
        (PropertyValue::Integer(x), PropertyValue::Integer(y)) => Some(x.cmp(y)),
        (PropertyValue::Number(x), PropertyValue::Number(y)) => x.partial_cmp(y),
        (PropertyValue::Boolean(x), PropertyValue::Boolean(y)) => Some(x.cmp(y)),
        (PropertyValue::Date(x), PropertyValue::Date(y)) => Some(x.cmp(y)),
        _ => None,
    }
}

struct CompiledPredicate {
    property: String,
    op: PredicateOp,
    value: PropertyValue,
}

impl CompiledPredicate {
    fn compile(schema: &ModelSchema, pred: &Predicate) -> Result<Self> {
        let prop = schema
            .property(&pred.property)
            .ok_or_else(|| Error::UnknownProperty(pred.property.clone()))?;
        let mismatch = || {
            Error::TypeMismatch(format!(
                "{:?} {:?} on {} property {:?}",
                pred.op,
                pred.value,
                prop.kind.label(),
                prop.name
            ))
        };
        let value = match (pred.op, &prop.kind) {
            (PredicateOp::Contains, PropertyType::String | PropertyType::Enum { .. }) => {
                match &pred.value {
                    Value::String(s) => PropertyValue::Text(s.clone()),
                    _ => return Err(mismatch()),
                }
            }
            (PredicateOp::Contains, _) => return Err(mismatch()),
            (PredicateOp::Lt | PredicateOp::Gt, PropertyType::Boolean) => return Err(mismatch()),
            // enum membership is not required for comparisons
            (_, PropertyType::Enum { .. }) => match &pred.value {
                Value::String(s) => PropertyValue::Text(s.clone()),
                _ => return Err(mismatch()),
            },
            (_, kind) => match coerce(kind, &pred.value) {
                Ok(Some(v)) => v,
                Ok(None) if matches!(kind, PropertyType::String) => PropertyValue::Text(String::new()),
                _ => return Err(mismatch()),
            },
        };
        Ok(CompiledPredicate {
            property: pred.property.clone(),
            op: pred.op,
            value,
        })
    }

    fn matches(&self, record: &Record) -> bool {
        let Some(actual) = record.values.get(&self.property) else {
            return false;
        };
        match self.op {
            PredicateOp::Contains => match (actual, &self.value) {
                (PropertyValue::Text(a), PropertyValue::Text(needle)) => a.contains(needle.as_str()),
                _ => false,
            },
            PredicateOp::Eq => compare(actual, &self.value) == Some(std::cmp::Ordering::Equal),
            PredicateOp::Lt => compare(actual, &self.value) == Some(std::cmp::Ordering::Less),
            PredicateOp::Gt => compare(actual, &self.value) == Some(std::cmp::Ordering::Greater),
        }
    }
}

/// The metadata graph of one dataset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetadataGraph {
    models: BTreeMap<Id, ModelSchema>,
    records: BTreeMap<Id, Record>,
    relationships: BTreeMap<Id, Relationship>,
}

impl MetadataGraph {
    pub fn models(&self) -> impl Iterator<Item = &ModelSchema> {
        self.models.values()
    }

    pub fn records(&self) -> impl Iterator<Item = &Record> {
        self.records.values()
    }

    pub fn relationships(&self) -> impl Iterator<Item = &Relationship> {
        self.relationships.values()
    }

    pub fn model(&self, id: Id) -> Option<&ModelSchema> {
        self.models.get(&id)
    }

    pub fn model_by_name(&self, name: &str) -> Option<&ModelSchema> {
        let slug = slugify(name);
        self.models.values().find(|m| m.name == name || m.slug() == slug)
    }

    pub fn record(&self, id: Id) -> Option<&Record> {
        self.records.get(&id)
    }

    pub fn record_count(&self) -> u64 {
        self.records.len() as u64
    }

    pub fn define_model(&mut self, id: Id, dataset_id: Id, input: &SchemaInput) -> Result<&ModelSchema> {
        let properties = input.validate()?;
        let slug = slugify(&input.name);
        if self.models.values().any(|m| m.slug() == slug) {
            return Err(Error::NameConflict(input.name.clone()));
        }
        self.models.insert(
            id,
            ModelSchema {
                id,
                dataset_id,
                name: input.name.trim().to_string(),
                properties,
            },
        );
        Ok(&self.models[&id])
    }

    pub fn create_record(
        &mut self,
        id: Id,
        model_id: Id,
        values: &serde_json::Map<String, Value>,
    ) -> Result<&Record> {
        let schema = self
            .models
            .get(&model_id)
            .ok_or_else(|| Error::NotFound(format!("model {model_id}")))?;
        let values = conform(schema, values)?;
        self.records.insert(
            id,
            Record {
                id,
                model_id,
                values,
                file_links: BTreeSet::new(),
            },
        );
        Ok(&self.records[&id])
    }

    /// Store a named edge once; returns the edge and whether it was new.
    pub fn relate(&mut self, id: Id, name: &str, from: Id, to: Id) -> Result<(Relationship, bool)> {
        if name.trim().is_empty() {
            return Err(Error::EmptyName);
        }
        for endpoint in [from, to] {
            if !self.records.contains_key(&endpoint) {
                return Err(Error::NotFound(format!("record {endpoint}")));
            }
        }
        if let Some(existing) = self
            .relationships
            .values()
            .find(|r| r.name == name && r.from_record == from && r.to_record == to)
        {
            return Ok((existing.clone(), false));
        }
        let rel = Relationship {
            id,
            name: name.to_string(),
            from_record: from,
            to_record: to,
        };
        self.relationships.insert(id, rel.clone());
        Ok((rel, true))
    }

    /// Add a file link; returns whether it was new.
    pub fn link_file(&mut self, record: Id, file: Id) -> Result<bool> {
        let rec = self
            .records
            .get_mut(&record)
            .ok_or_else(|| Error::NotFound(format!("record {record}")))?;
        Ok(rec.file_links.insert(file))
    }

    /// Drop every link to any of `files`; returns the records that changed.
    pub fn detach_files(&mut self, files: &BTreeSet<Id>) -> Vec<Id> {
        let mut changed = Vec::new();
        for rec in self.records.values_mut() {
            let before = rec.file_links.len();
            rec.file_links.retain(|f| !files.contains(f));
            if rec.file_links.len() != before {
                changed.push(rec.id);
            }
        }
        changed
    }

    pub fn query(
        &self,
        model_name: &str,
        predicates: &[Predicate],
        traverse: Option<&Traversal>,
    ) -> Result<Vec<&Record>> {
        let schema = self
            .model_by_name(model_name)
            .ok_or_else(|| Error::UnknownModel(model_name.to_string()))?;
        let compiled = predicates
            .iter()
            .map(|p| CompiledPredicate::compile(schema, p))
            .collect::<Result<Vec<_>>>()?;
        let matched: Vec<&Record> = self
            .records
            .values()
            .filter(|r| r.model_id == schema.id && compiled.iter().all(|p| p.matches(r)))
            .collect();
        let Some(traversal) = traverse else {
            return Ok(matched);
        };
        let target = self
            .model_by_name(&traversal.target_model)
            .ok_or_else(|| Error::UnknownModel(traversal.target_model.clone()))?;
        let sources: BTreeSet<Id> = matched.iter().map(|r| r.id).collect();
        let mut reached = BTreeSet::new();
        for rel in self
            .relationships
            .values()
            .filter(|r| r.name == traversal.relationship_name)
        {
            for (a, b) in [(rel.from_record, rel.to_record), (rel.to_record, rel.from_record)] {
                if sources.contains(&a) && self.records[&b].model_id == target.id {
                    reached.insert(b);
                }
            }
        }
        Ok(reached.into_iter().map(|id| &self.records[&id]).collect())
    }

    /// Check schema conformance and that every edge and link resolves.
    pub fn validate(&self, live_file: impl Fn(Id) -> bool) -> std::result::Result<(), String> {
        for rec in self.records.values() {
            let schema = self
                .models
                .get(&rec.model_id)
                .ok_or_else(|| format!("record {} has unknown model", rec.id))?;
            if !conforms(schema, &rec.values) {
                return Err(format!("record {} violates its schema", rec.id));
            }
            if let Some(f) = rec.file_links.iter().find(|f| !live_file(**f)) {
                return Err(format!("record {} links dead file {f}", rec.id));
            }
        }
        for rel in self.relationships.values() {
            if !self.records.contains_key(&rel.from_record) || !self.records.contains_key(&rel.to_record) {
                return Err(format!("relationship {} dangles", rel.id));
            }
        }
        Ok(())
    }

    /// Render the graph as tables keyed by snapshot-relative path.
    /// `file_path` maps a linked file node to its dataset-relative path.
    pub fn serialize(&self, file_path: impl Fn(Id) -> Option<String>) -> BTreeMap<String, Vec<u8>> {
        let mut out = BTreeMap::new();
        for model in self.models.values() {
            let mut rows = Vec::new();
            let mut header = vec!["id".to_string()];
            header.extend(model.properties.iter().map(|p| p.name.clone()));
            rows.push(header);
            for rec in self.records.values().filter(|r| r.model_id == model.id) {
                let mut row = vec![rec.id.to_hex()];
                row.extend(model.properties.iter().map(|p| {
                    rec.values.get(&p.name).map(PropertyValue::to_cell).unwrap_or_default()
                }));
                rows.push(row);
            }
            out.insert(model.file_name(), write_csv(&rows));
        }

        let mut rows = vec![vec!["id".into(), "name".into(), "from".into(), "to".into()]];
        rows.extend(self.relationships.values().map(|r| {
            vec![r.id.to_hex(), r.name.clone(), r.from_record.to_hex(), r.to_record.to_hex()]
        }));
        out.insert(RELATIONSHIPS_FILE.to_string(), write_csv(&rows));

        let mut links: Vec<(String, String)> = self
            .records
            .values()
            .flat_map(|r| {
                r.file_links
                    .iter()
                    .filter_map(|f| file_path(*f))
                    .map(move |p| (r.id.to_hex(), p))
            })
            .collect();
        links.sort();
        let mut rows = vec![vec!["record_id".to_string(), "file_path".to_string()]];
        rows.extend(links.into_iter().map(|(r, p)| vec![r, p]));
        out.insert(FILE_LINKS_FILE.to_string(), write_csv(&rows));
        out
    }

    /// Rebuild a graph from its tables. Column types come from `schemas`;
    /// file paths are resolved back to node ids with `resolve_file`.
    pub fn from_tables(
        schemas: &[ModelSchema],
        tables: &BTreeMap<String, Vec<u8>>,
        resolve_file: impl Fn(&str) -> Option<Id>,
    ) -> Result<MetadataGraph> {
        let bad = |what: String| Error::InvalidArgument(format!("malformed metadata table: {what}"));
        let mut graph = MetadataGraph::default();
        for schema in schemas {
            graph.models.insert(schema.id, schema.clone());
            let Some(bytes) = tables.get(&schema.file_name()) else {
                continue;
            };
            let rows = read_csv(bytes).map_err(bad)?;
            let mut rows = rows.into_iter();
            let header = rows.next().ok_or_else(|| bad(format!("{} has no header", schema.name)))?;
            let expected: Vec<&str> = std::iter::once("id")
                .chain(schema.properties.iter().map(|p| p.name.as_str()))
                .collect();
            if header != expected {
                return Err(bad(format!("{} header {:?}", schema.name, header)));
            }
            for row in rows {
                let id: Id = row[0].parse().map_err(|_| bad(format!("record id {:?}", row[0])))?;
                let mut values = BTreeMap::new();
                for (prop, cell) in schema.properties.iter().zip(&row[1..]) {
                    if cell.is_empty() {
                        continue;
                    }
                    let value = PropertyValue::from_cell(&prop.kind, cell)
                        .ok_or_else(|| bad(format!("{}.{} = {cell:?}", schema.name, prop.name)))?;
                    values.insert(prop.name.clone(), value);
                }
                graph.records.insert(
                    id,
                    Record {
                        id,
                        model_id: schema.id,
                        values,
                        file_links: BTreeSet::new(),
                    },
                );
            }
        }

        if let Some(bytes) = tables.get(RELATIONSHIPS_FILE) {
            for row in read_csv(bytes).map_err(bad)?.into_iter().skip(1) {
                let [id, name, from, to] = <[String; 4]>::try_from(row)
                    .map_err(|r| bad(format!("relationship row {r:?}")))?;
                let parse = |s: &str| s.parse::<Id>().map_err(|_| bad(format!("id {s:?}")));
                let rel = Relationship {
                    id: parse(&id)?,
                    name,
                    from_record: parse(&from)?,
                    to_record: parse(&to)?,
                };
                graph.relationships.insert(rel.id, rel);
            }
        }
        if let Some(bytes) = tables.get(FILE_LINKS_FILE) {
            for row in read_csv(bytes).map_err(bad)?.into_iter().skip(1) {
                let [record, path] = <[String; 2]>::try_from(row)
                    .map_err(|r| bad(format!("file link row {r:?}")))?;
                let record: Id = record.parse().map_err(|_| bad(format!("id {record:?}")))?;
                let file = resolve_file(&path).ok_or_else(|| Error::NotFound(format!("file {path:?}")))?;
                graph
                    .records
                    .get_mut(&record)
                    .ok_or_else(|| bad(format!("link from unknown record {record}")))?
                    .file_links
                    .insert(file);
            }
        }
        Ok(graph)
    }
}

fn write_csv(rows: &[Vec<String>]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(Vec::new());
    for row in rows {
        writer.write_record(row).expect("writing to memory");
    }
    writer.into_inner().expect("flushing to memory")
}

fn read_csv(bytes: &[u8]) -> std::result::Result<Vec<Vec<String>>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(bytes);
    reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()).map_err(|e| e.to_string()))
        .collect()
}
