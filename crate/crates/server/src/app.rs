use std::collections::{HashMap, HashSet};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{DefaultBodyLimit, FromRequestParts};
use axum::http::request::Parts;
use axum::http::HeaderMap;
use axum::Router;
use chrono::{DateTime, Utc};
use fairhaven_core::persist::FileState;
use fairhaven_core::storage::{FsBackend, ObjectStore};
use fairhaven_core::{Clock, Id, ManualClock, Platform, SystemClock};
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use crate::config::{ClockMode, Config};
use crate::error::{ApiError, ServerError};
use crate::routes;
use crate::webhooks::WebhookService;

pub const PAYER_HEADER: &str = "x-fairhaven-payer";

pub struct AppState {
    pub platform: Platform,
    pub webhooks: Arc<WebhookService>,
    tokens: HashMap<String, Id>,
    admins: HashSet<Id>,
    manual_clock: Option<ManualClock>,
    clock_file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct ClockFile {
    now: DateTime<Utc>,
}

impl AppState {
    pub fn user_for_token(&self, token: &str) -> Option<Id> {
        self.tokens.get(token).copied()
    }

    pub fn is_admin(&self, user: Id) -> bool {
        self.admins.contains(&user)
    }

    pub fn manual_clock(&self) -> Option<&ManualClock> {
        self.manual_clock.as_ref()
    }

    /// Persist the manual clock so a restart resumes at the same instant.
    pub fn save_clock(&self) -> std::io::Result<()> {
        if let (Some(clock), Some(path)) = (&self.manual_clock, &self.clock_file) {
            let bytes = serde_json::to_vec(&ClockFile { now: clock.now() })?;
            std::fs::write(path, bytes)?;
        }
        Ok(())
    }
}

pub struct Server {
    state: Arc<AppState>,
    config: Config,
}

/// The clock in use, the manual handle when there is one, and where it is saved.
type ClockSetup = (Arc<dyn Clock>, Option<ManualClock>, Option<PathBuf>);

fn open_clock(config: &Config) -> Result<ClockSetup, ServerError> {
    match config.clock {
        ClockMode::Real => Ok((Arc::new(SystemClock), None, None)),
        ClockMode::Manual => {
            let file = config.data_dir.as_ref().map(|d| d.join("clock.json"));
            let clock = ManualClock::at_epoch();
            if let Some(path) = file.as_ref().filter(|p| p.exists()) {
                let saved: ClockFile = serde_json::from_slice(&std::fs::read(path)?)
                    .map_err(|e| ServerError::Config(format!("{}: {e}", path.display())))?;
                clock.set(saved.now);
            }
            Ok((Arc::new(clock.clone()), Some(clock), file))
        }
    }
}

impl Server {
    /// Opens persistence, provisions configured users and workspaces and
    /// starts webhook delivery. Must run inside a Tokio runtime.
    pub fn open(config: Config) -> Result<Server, ServerError> {
        let (clock, manual_clock, clock_file) = open_clock(&config)?;
        let mut builder = Platform::builder(clock.clone());
        let mut hooks_file = None;
        if let Some(dir) = &config.data_dir {
            std::fs::create_dir_all(dir)?;
            let store = ObjectStore::open(
                Box::new(FsBackend::open(dir.join("objects"))?),
                config.lifecycle,
                config.rates,
                clock.clone(),
            )?;
            builder = builder
                .store(store)
                .state_backend(Box::new(FileState::new(dir.join("state.json"))));
            hooks_file = Some(dir.join("webhooks.json"));
        } else {
            let store = ObjectStore::open(
                Box::new(fairhaven_core::storage::MemoryBackend::new()),
                config.lifecycle,
                config.rates,
                clock.clone(),
            )?;
            builder = builder.store(store);
        }
        let platform = builder.build()?;

        let mut tokens = HashMap::new();
        let mut admins = HashSet::new();
        for user in &config.users {
            let id = match platform.user_by_email(&user.email) {
                Some(existing) => existing.id,
                None => platform.create_user(&user.name, &user.email)?.id,
            };
            if tokens.insert(user.token.clone(), id).is_some() {
                return Err(ServerError::Config(format!("token for {} is not unique", user.email)));
            }
            if user.admin {
                admins.insert(id);
            }
        }
        provision_workspaces(&platform, &config)?;

        let webhooks = WebhookService::start(hooks_file, clock, config.webhooks.clone())?;
        platform.subscribe(webhooks.clone());
        let state = Arc::new(AppState {
            platform,
            webhooks,
            tokens,
            admins,
            manual_clock,
            clock_file,
        });
        state.save_clock()?;
        Ok(Server { state, config })
    }

    pub fn state(&self) -> Arc<AppState> {
        self.state.clone()
    }

    pub fn router(&self) -> Router {
        let mut router = routes::router(self.state.clone()).layer(DefaultBodyLimit::max(self.config.max_chunk_bytes));
        if let Some(dir) = &self.config.static_dir {
            router = router.fallback_service(ServeDir::new(dir));
        }
        router
    }

    /// Serve on `listener` until the future resolves.
    pub async fn serve(self, listener: TcpListener, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
        if self.config.clock == ClockMode::Real && self.config.sweep_interval_secs > 0 {
            let state = self.state.clone();
            let every = std::time::Duration::from_secs(self.config.sweep_interval_secs);
            tokio::spawn(async move {
                let mut tick = tokio::time::interval(every);
                loop {
                    tick.tick().await;
                    let now = state.platform.now();
                    if let Err(e) = state.platform.sweep(now) {
                        tracing::error!(error = %e, "lifecycle sweep failed");
                    }
                }
            });
        }
        let router = self.router();
        axum::serve(listener, router).with_graceful_shutdown(shutdown).await
    }

    /// Bind to `addr` and serve in the background. For tests and embedding.
    pub async fn spawn(self, addr: &str) -> std::io::Result<(SocketAddr, tokio::task::JoinHandle<std::io::Result<()>>)> {
        let listener = TcpListener::bind(addr).await?;
        let local = listener.local_addr()?;
        let handle = tokio::spawn(self.serve(listener, std::future::pending()));
        Ok((local, handle))
    }
}

fn provision_workspaces(platform: &Platform, config: &Config) -> Result<(), ServerError> {
    let user = |email: &str| {
        platform
            .user_by_email(email)
            .map(|u| u.id)
            .ok_or_else(|| ServerError::Config(format!("workspace member {email} is not a configured user")))
    };
    for ws in &config.workspaces {
        let members: Vec<Id> = ws.members.iter().map(|m| user(m)).collect::<Result<_, _>>()?;
        let publishers: Vec<Id> = ws.publishers.iter().map(|m| user(m)).collect::<Result<_, _>>()?;
        if platform.workspaces().iter().any(|w| w.name == ws.name) {
            continue;
        }
        let Some(creator) = members.first().or(publishers.first()).copied() else {
            return Err(ServerError::Config(format!("workspace {} has no members", ws.name)));
        };
        let workspace = platform.create_workspace(&ws.name, creator)?;
        for id in members.iter().chain(&publishers) {
            if !platform.workspace(workspace.id)?.members.contains(id) {
                platform.add_workspace_member(workspace.id, *id)?;
            }
        }
        for id in &publishers {
            if !platform.team(workspace.publishing_team)?.members.contains(id) {
                platform.add_team_member(workspace.publishing_team, *id)?;
            }
        }
    }
    Ok(())
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(axum::http::header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

/// The authenticated user. Missing or unknown tokens are rejected with 401.
#[derive(Debug, Clone, Copy)]
pub struct Caller(pub Id);

impl FromRequestParts<Arc<AppState>> for Caller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        bearer(&parts.headers)
            .and_then(|t| state.user_for_token(t))
            .map(Caller)
            .ok_or(ApiError::Unauthorized)
    }
}

/// Optional authentication for public routes. A token that is present but
/// unknown is still rejected.
#[derive(Debug, Clone, Copy)]
pub struct MaybeCaller(pub Option<Id>);

impl FromRequestParts<Arc<AppState>> for MaybeCaller {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &Arc<AppState>) -> Result<Self, Self::Rejection> {
        if parts.headers.get(axum::http::header::AUTHORIZATION).is_none() {
            return Ok(MaybeCaller(None));
        }
        Caller::from_request_parts(parts, state).await.map(|c| MaybeCaller(Some(c.0)))
    }
}

/// Payer token for requester-pays reads.
#[derive(Debug, Clone)]
pub struct Payer(pub Option<String>);

impl<S: Send + Sync> FromRequestParts<S> for Payer {
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, _: &S) -> Result<Self, Self::Rejection> {
        Ok(Payer(
            parts
                .headers
                .get(PAYER_HEADER)
                .and_then(|v| v.to_str().ok())
                .map(|v| v.trim().to_string())
                .filter(|v| !v.is_empty()),
        ))
    }
}

impl Payer {
    pub fn as_deref(&self) -> Option<&str> {
        self.0.as_deref()
    }
}
