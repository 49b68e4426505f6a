use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use fairhaven_core::dataset::{Team, User, Workspace};
use fairhaven_core::{Error, Id};
use serde::{Deserialize, Serialize};

use crate::app::{AppState, Caller};
use crate::error::ApiResult;

#[derive(Debug, Serialize)]
pub struct Me {
    #[serde(flatten)]
    user: User,
    admin: bool,
    workspaces: Vec<Workspace>,
}

fn member_workspace(state: &AppState, workspace: Id, caller: Id) -> Result<Workspace, Error> {
    let ws = state.platform.workspace(workspace)?;
    if !ws.members.contains(&caller) {
        return Err(Error::Forbidden);
    }
    Ok(ws)
}

pub async fn me(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> ApiResult<Json<Me>> {
    let user = state.platform.user(caller)?;
    let workspaces = state
        .platform
        .workspaces()
        .into_iter()
        .filter(|w| w.members.contains(&caller))
        .collect();
    Ok(Json(Me {
        user,
        admin: state.is_admin(caller),
        workspaces,
    }))
}

pub async fn users(State(state): State<Arc<AppState>>, Caller(_): Caller) -> Json<Vec<User>> {
    Json(state.platform.users())
}

#[derive(Debug, Deserialize)]
pub struct NewWorkspace {
    name: String,
}

pub async fn create(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Json(body): Json<NewWorkspace>,
) -> ApiResult<(StatusCode, Json<Workspace>)> {
    let ws = state.platform.create_workspace(&body.name, caller)?;
    Ok((StatusCode::CREATED, Json(ws)))
}

pub async fn list(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> Json<Vec<Workspace>> {
    Json(
        state
            .platform
            .workspaces()
            .into_iter()
            .filter(|w| w.members.contains(&caller))
            .collect(),
    )
}

pub async fn show(State(state): State<Arc<AppState>>, Caller(caller): Caller, Path(id): Path<Id>) -> ApiResult<Json<Workspace>> {
    Ok(Json(member_workspace(&state, id, caller)?))
}

/// Identify a user by id or by email.
#[derive(Debug, Deserialize)]
pub struct UserRef {
    #[serde(default)]
    user_id: Option<Id>,
    #[serde(default)]
    email: Option<String>,
}

impl UserRef {
    fn resolve(&self, state: &AppState) -> Result<Id, Error> {
        match (&self.user_id, &self.email) {
            (Some(id), _) => Ok(state.platform.user(*id)?.id),
            (None, Some(email)) => state
                .platform
                .user_by_email(email)
                .map(|u| u.id)
                .ok_or_else(|| Error::NotFound(format!("user {email}"))),
            (None, None) => Err(Error::InvalidArgument("user_id or email is required".into())),
        }
    }
}

pub async fn add_member(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<UserRef>,
) -> ApiResult<Json<Workspace>> {
    member_workspace(&state, id, caller)?;
    let user = body.resolve(&state)?;
    state.platform.add_workspace_member(id, user)?;
    Ok(Json(state.platform.workspace(id)?))
}

#[derive(Debug, Deserialize)]
pub struct NewTeam {
    name: String,
    #[serde(default)]
    members: Vec<Id>,
}

pub async fn create_team(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<NewTeam>,
) -> ApiResult<(StatusCode, Json<Team>)> {
    member_workspace(&state, id, caller)?;
    let team = state.platform.create_team(id, &body.name, &body.members)?;
    Ok((StatusCode::CREATED, Json(team)))
}

pub async fn add_team_member(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<UserRef>,
) -> ApiResult<Json<Team>> {
    let team = state.platform.team(id)?;
    member_workspace(&state, team.workspace_id, caller)?;
    let user = body.resolve(&state)?;
    state.platform.add_team_member(id, user)?;
    Ok(Json(state.platform.team(id)?))
}

#[derive(Debug, Deserialize)]
pub struct PublishingTeam {
    team_id: Id,
}

pub async fn set_publishing_team(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<PublishingTeam>,
) -> ApiResult<Json<Workspace>> {
    member_workspace(&state, id, caller)?;
    state.platform.set_publishing_team(id, body.team_id)?;
    Ok(Json(state.platform.workspace(id)?))
}

#[derive(Debug, Deserialize)]
pub struct Statuses {
    labels: Vec<String>,
    default: String,
}

pub async fn configure_statuses(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Path(id): Path<Id>,
    Json(body): Json<Statuses>,
) -> ApiResult<Json<Workspace>> {
    member_workspace(&state, id, caller)?;
    let labels: Vec<&str> = body.labels.iter().map(String::as_str).collect();
    state.platform.configure_statuses(id, &labels, &body.default)?;
    Ok(Json(state.platform.workspace(id)?))
}
