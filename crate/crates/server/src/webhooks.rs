//! Webhook registry and delivery.
//!
//! Platform events are queued by an [`EventSink`] and delivered from a
//! background task, so request handlers never wait on a receiver. Each
//! delivery is signed with HMAC-SHA-256 over the exact body bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use fairhaven_core::events::{Event, EventKind, EventSink};
use fairhaven_core::id::IdGenerator;
use fairhaven_core::persist::{FileState, MemoryState, StateBackend};
use fairhaven_core::{Clock, Error, Id, Result};
use hmac::{Hmac, Mac};
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use tokio::sync::mpsc;

use crate::config::WebhookSettings;

pub const SIGNATURE_HEADER: &str = "x-fairhaven-signature";
pub const EVENT_HEADER: &str = "x-fairhaven-event";
pub const DELIVERY_HEADER: &str = "x-fairhaven-delivery";

/// Retries after the first attempt, waiting 1, 2 and 4 time units.
pub const RETRY_BACKOFF_UNITS: [u32; 3] = [1, 2, 4];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Webhook {
    pub id: Id,
    pub workspace_id: Id,
    pub url: String,
    pub events: BTreeSet<EventKind>,
    pub secret: String,
    pub created_by: Id,
    pub created_at: DateTime<Utc>,
}

/// A webhook as returned by the API; the secret is never echoed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookView {
    pub id: Id,
    pub workspace_id: Id,
    pub url: String,
    pub events: BTreeSet<EventKind>,
    pub created_at: DateTime<Utc>,
}

impl From<&Webhook> for WebhookView {
    fn from(w: &Webhook) -> Self {
        WebhookView {
            id: w.id,
            workspace_id: w.workspace_id,
            url: w.url.clone(),
            events: w.events.clone(),
            created_at: w.created_at,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebhookSpec {
    pub workspace_id: Id,
    pub url: String,
    pub events: BTreeSet<EventKind>,
    pub secret: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryAttempt {
    pub delivery_id: Id,
    pub webhook_id: Id,
    pub event: EventKind,
    pub dataset_id: Id,
    pub attempt: u32,
    pub at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub success: bool,
}

/// Body POSTed to receivers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryBody {
    pub event: EventKind,
    pub dataset_id: Id,
    pub payload: serde_json::Value,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Registry {
    hooks: BTreeMap<Id, Webhook>,
    deliveries: Vec<DeliveryAttempt>,
}

/// Hex HMAC-SHA-256 of `body` under `secret`.
pub fn sign(secret: &str, body: &[u8]) -> String {
    let mut mac = Hmac::<Sha256>::new_from_slice(secret.as_bytes()).expect("hmac accepts any key length");
    mac.update(body);
    hex::encode(mac.finalize().into_bytes())
}

pub struct WebhookService {
    registry: Mutex<Registry>,
    persistence: Box<dyn StateBackend>,
    ids: Mutex<IdGenerator>,
    clock: Arc<dyn Clock>,
    queue: mpsc::UnboundedSender<Event>,
}

impl WebhookService {
    /// Opens the registry and starts the delivery worker. Needs a Tokio runtime.
    pub fn start(data_file: Option<PathBuf>, clock: Arc<dyn Clock>, settings: WebhookSettings) -> Result<Arc<Self>> {
        let persistence: Box<dyn StateBackend> = match data_file {
            Some(path) => Box::new(FileState::new(path)),
            None => Box::new(MemoryState::new()),
        };
        let registry = match persistence.load()? {
            Some(bytes) => serde_json::from_slice(&bytes)?,
            None => Registry::default(),
        };
        let (tx, rx) = mpsc::unbounded_channel();
        let service = Arc::new(WebhookService {
            registry: Mutex::new(registry),
            persistence,
            ids: Mutex::new(IdGenerator::from_entropy()),
            clock,
            queue: tx,
        });
        let client = reqwest::Client::builder()
            .timeout(Duration::from_millis(settings.timeout_ms))
            .build()
            .map_err(|e| Error::Persistence(format!("http client: {e}")))?;
        tokio::spawn(worker(Arc::downgrade(&service), rx, client, settings));
        Ok(service)
    }

    fn save(&self, registry: &Registry) -> Result<()> {
        self.persistence.save(&serde_json::to_vec(registry)?)
    }

    pub fn register(&self, spec: WebhookSpec, created_by: Id) -> Result<Webhook> {
        if spec.events.is_empty() {
            return Err(Error::InvalidArgument("a webhook needs at least one event".into()));
        }
        let url = spec.url.trim();
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(Error::InvalidArgument(format!("webhook url must be http(s): {url:?}")));
        }
        if spec.secret.is_empty() {
            return Err(Error::InvalidArgument("webhook secret must not be empty".into()));
        }
        let hook = Webhook {
            id: self.ids.lock().expect("ids poisoned").next_id(),
            workspace_id: spec.workspace_id,
            url: url.to_string(),
            events: spec.events,
            secret: spec.secret,
            created_by,
            created_at: self.clock.now(),
        };
        let mut registry = self.registry.lock().expect("registry poisoned");
        registry.hooks.insert(hook.id, hook.clone());
        self.save(&registry)?;
        Ok(hook)
    }

    pub fn remove(&self, id: Id) -> Result<Webhook> {
        let mut registry = self.registry.lock().expect("registry poisoned");
        let hook = registry
            .hooks
            .remove(&id)
            .ok_or_else(|| Error::NotFound(format!("webhook {id}")))?;
        self.save(&registry)?;
        Ok(hook)
    }

    pub fn get(&self, id: Id) -> Result<Webhook> {
        self.registry
            .lock()
            .expect("registry poisoned")
            .hooks
            .get(&id)
            .cloned()
            .ok_or_else(|| Error::NotFound(format!("webhook {id}")))
    }

    pub fn list(&self, workspace: Id) -> Vec<Webhook> {
        self.registry
            .lock()
            .expect("registry poisoned")
            .hooks
            .values()
            .filter(|h| h.workspace_id == workspace)
            .cloned()
            .collect()
    }

    pub fn deliveries(&self, webhook: Id) -> Vec<DeliveryAttempt> {
        self.registry
            .lock()
            .expect("registry poisoned")
            .deliveries
            .iter()
            .filter(|d| d.webhook_id == webhook)
            .cloned()
            .collect()
    }

    fn record(&self, attempt: DeliveryAttempt) {
        let mut registry = self.registry.lock().expect("registry poisoned");
        registry.deliveries.push(attempt);
        if let Err(e) = self.save(&registry) {
            tracing::error!(error = %e, "could not persist webhook delivery log");
        }
    }

    fn matching(&self, event: &Event) -> Vec<Webhook> {
        self.registry
            .lock()
            .expect("registry poisoned")
            .hooks
            .values()
            .filter(|h| h.workspace_id == event.workspace_id && h.events.contains(&event.kind))
            .cloned()
            .collect()
    }

    fn next_id(&self) -> Id {
        self.ids.lock().expect("ids poisoned").next_id()
    }
}

impl EventSink for WebhookService {
    fn publish(&self, event: &Event) {
        // the worker only stops when the service is dropped
        let _ = self.queue.send(event.clone());
    }
}

async fn worker(
    service: std::sync::Weak<WebhookService>,
    mut rx: mpsc::UnboundedReceiver<Event>,
    client: reqwest::Client,
    settings: WebhookSettings,
) {
    while let Some(event) = rx.recv().await {
        let Some(svc) = service.upgrade() else { break };
        let body = DeliveryBody {
            event: event.kind,
            dataset_id: event.dataset_id,
            payload: event.payload.clone(),
            timestamp: event.timestamp,
        };
        let bytes = serde_json::to_vec(&body).expect("delivery body serializes");
        for hook in svc.matching(&event) {
            let svc = svc.clone();
            let client = client.clone();
            let bytes = bytes.clone();
            let event = event.clone();
            let unit = Duration::from_millis(settings.time_unit_ms);
            tokio::spawn(async move { deliver(&svc, &client, &hook, &event, bytes, unit).await });
        }
    }
}

async fn deliver(svc: &WebhookService, client: &reqwest::Client, hook: &Webhook, event: &Event, body: Vec<u8>, unit: Duration) {
    let delivery_id = svc.next_id();
    let signature = sign(&hook.secret, &body);
    let waits = std::iter::once(0).chain(RETRY_BACKOFF_UNITS);
    for (attempt, wait) in (1u32..).zip(waits) {
        if wait > 0 {
            tokio::time::sleep(unit * wait).await;
        }
        let result = client
            .post(&hook.url)
            .header(reqwest::header::CONTENT_TYPE, "application/json")
            .header(SIGNATURE_HEADER, &signature)
            .header(EVENT_HEADER, event.kind.as_str())
            .header(DELIVERY_HEADER, delivery_id.to_string())
            .body(body.clone())
            .send()
            .await;
        let (status, error, success) = match result {
            Ok(resp) => {
                let code = resp.status();
                (Some(code.as_u16()), None, code.is_success())
            }
            Err(e) => (None, Some(e.to_string()), false),
        };
        svc.record(DeliveryAttempt {
            delivery_id,
            webhook_id: hook.id,
            event: event.kind,
            dataset_id: event.dataset_id,
            attempt,
            at: svc.clock.now(),
            status,
            error,
            success,
        });
        if success {
            return;
        }
    }
    tracing::warn!(webhook = %hook.id, url = %hook.url, "webhook delivery gave up");
}
