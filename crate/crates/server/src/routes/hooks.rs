use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::Json;
use fairhaven_core::{Error, Id};
use serde::Deserialize;

use crate::app::{AppState, Caller};
use crate::error::ApiResult;
use crate::webhooks::{DeliveryAttempt, WebhookSpec, WebhookView};

fn ensure_member(state: &AppState, workspace: Id, caller: Id) -> Result<(), Error> {
    if state.platform.workspace(workspace)?.members.contains(&caller) {
        Ok(())
    } else {
        Err(Error::Forbidden)
    }
}

pub async fn register(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Json(spec): Json<WebhookSpec>,
) -> ApiResult<(StatusCode, Json<WebhookView>)> {
    ensure_member(&state, spec.workspace_id, caller)?;
    let hook = state.webhooks.register(spec, caller)?;
    Ok((StatusCode::CREATED, Json(WebhookView::from(&hook))))
}

#[derive(Debug, Deserialize)]
pub struct ListQuery {
    workspace_id: Id,
}

pub async fn list(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Query(q): Query<ListQuery>,
) -> ApiResult<Json<Vec<WebhookView>>> {
    ensure_member(&state, q.workspace_id, caller)?;
    Ok(Json(state.webhooks.list(q.workspace_id).iter().map(WebhookView::from).collect()))
}

pub async fn show(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<WebhookView>> {
    let hook = state.webhooks.get(id)?;
    ensure_member(&state, hook.workspace_id, caller)?;
    Ok(Json(WebhookView::from(&hook)))
}

pub async fn remove(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<StatusCode> {
    let hook = state.webhooks.get(id)?;
    ensure_member(&state, hook.workspace_id, caller)?;
    state.webhooks.remove(id)?;
    Ok(StatusCode::NO_CONTENT)
}

pub async fn deliveries(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
) -> ApiResult<Json<Vec<DeliveryAttempt>>> {
    let hook = state.webhooks.get(id)?;
    ensure_member(&state, hook.workspace_id, caller)?;
    Ok(Json(state.webhooks.deliveries(id)))
}
