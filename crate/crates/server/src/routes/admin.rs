use std::sync::Arc;

use axum::extract::State;
use axum::Json;
use chrono::{DateTime, Duration, Utc};
use fairhaven_core::platform::SweepReport;
use fairhaven_core::{Clock, Error};
use serde::{Deserialize, Serialize};

use crate::app::{AppState, Caller};
use crate::error::{ApiError, ApiResult};

fn ensure_admin(state: &AppState, caller: fairhaven_core::Id) -> Result<(), ApiError> {
    if state.is_admin(caller) {
        Ok(())
    } else {
        Err(Error::Forbidden.into())
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ClockView {
    pub now: DateTime<Utc>,
    pub manual: bool,
}

pub async fn clock(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> ApiResult<Json<ClockView>> {
    ensure_admin(&state, caller)?;
    Ok(Json(ClockView {
        now: state.platform.now(),
        manual: state.manual_clock().is_some(),
    }))
}

/// Move the manual clock. Time never goes backwards.
#[derive(Debug, Default, Deserialize)]
pub struct ClockChange {
    #[serde(default)]
    advance_days: i64,
    #[serde(default)]
    advance_seconds: i64,
    #[serde(default)]
    set: Option<DateTime<Utc>>,
}

pub async fn set_clock(
    State(state): State<Arc<AppState>>,
    Caller(caller): Caller,
    Json(change): Json<ClockChange>,
) -> ApiResult<Json<ClockView>> {
    ensure_admin(&state, caller)?;
    let clock = state
        .manual_clock()
        .ok_or_else(|| ApiError::BadRequest("the server runs on the real clock".into()))?;
    let now = clock.now();
    let target = change.set.unwrap_or(now) + Duration::days(change.advance_days) + Duration::seconds(change.advance_seconds);
    if target < now {
        return Err(ApiError::BadRequest("the clock cannot move backwards".into()));
    }
    clock.set(target);
    state.save_clock().map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(Json(ClockView { now: target, manual: true }))
}

pub async fn sweep(State(state): State<Arc<AppState>>, Caller(caller): Caller) -> ApiResult<Json<SweepReport>> {
    ensure_admin(&state, caller)?;
    let now = state.platform.now();
    let report = super::blocking(&state, move |p| p.sweep(now)).await?;
    Ok(Json(report))
}
