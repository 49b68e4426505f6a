use std::collections::BTreeMap;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use fairhaven_core::graph::{ModelSchema, Predicate, Record, SchemaInput, Traversal};
use fairhaven_core::platform::{GraphDump, LinkOutcome, LinkSpec};
use fairhaven_core::Id;
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::app::{AppState, Caller};
use crate::error::{ApiError, ApiResult};

pub async fn models(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Vec<ModelSchema>>> {
    Ok(Json(state.platform.models(id, caller)?))
}

pub async fn define_model(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(schema): Json<SchemaInput>,
) -> ApiResult<(StatusCode, Json<ModelSchema>)> {
    Ok((StatusCode::CREATED, Json(state.platform.define_model(id, caller, &schema)?)))
}

pub async fn create_record(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(model): Path<Id>,
    Json(values): Json<Map<String, Value>>,
) -> ApiResult<(StatusCode, Json<Record>)> {
    Ok((StatusCode::CREATED, Json(state.platform.create_record(model, caller, &values)?)))
}

pub async fn link(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(spec): Json<LinkSpec>,
) -> ApiResult<Json<LinkOutcome>> {
    Ok(Json(state.platform.link(id, caller, &spec)?))
}

/// `where` and `traverse` are JSON documents carried in the query string.
#[derive(Debug, Deserialize)]
pub struct RecordQuery {
    model: String,
    #[serde(default, rename = "where")]
    predicates: Option<String>,
    #[serde(default)]
    traverse: Option<String>,
}

fn parse_json<T: serde::de::DeserializeOwned>(field: &str, text: &str) -> Result<T, ApiError> {
    serde_json::from_str(text).map_err(|e| ApiError::BadRequest(format!("{field}: {e}")))
}

pub async fn query_records(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Query(q): Query<RecordQuery>,
) -> ApiResult<Json<Vec<Record>>> {
    let predicates: Vec<Predicate> = match &q.predicates {
        Some(text) => parse_json("where", text)?,
        None => Vec::new(),
    };
    let traverse: Option<Traversal> = match &q.traverse {
        Some(text) => Some(parse_json("traverse", text)?),
        None => None,
    };
    Ok(Json(state.platform.query_records(id, caller, &q.model, &predicates, traverse.as_ref())?))
}

pub async fn graph(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<GraphDump>> {
    Ok(Json(state.platform.graph_dump(id, caller)?))
}

/// The tabular serialization, file name to CSV text.
pub async fn tables(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
) -> ApiResult<Json<BTreeMap<String, String>>> {
    let tables = state.platform.serialize_graph(id, caller)?;
    Ok(Json(
        tables
            .into_iter()
            .map(|(k, v)| (k, String::from_utf8_lossy(&v).into_owned()))
            .collect(),
    ))
}
