use std::collections::VecDeque;
use std::fs::File;
use std::io::{Read, Seek, SeekFrom};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use fairhaven_core::platform::FinalizeOutcome;
use fairhaven_core::upload::{ChunkAck, EntryStatus, EntryView, SyncView, Verification};
use serde::Serialize;
use serde_json::json;

use crate::client::Api;
use crate::error::{AgentError, Result};
use crate::ledger::Ledger;

pub const DEFAULT_WORKERS: usize = 4;
pub const DEFAULT_CHUNK_SIZE: u64 = 5 << 20;
pub const DEFAULT_RETRIES: u32 = 5;

/// Test hook: exit the process abruptly after this many acknowledged chunks.
pub const KILL_AFTER_ENV: &str = "FH_FAULT_KILL_AFTER_CHUNKS";
/// Base delay of the retry backoff, in milliseconds.
pub const BACKOFF_ENV: &str = "FH_RETRY_BACKOFF_MS";

#[derive(Debug, Clone)]
pub struct UploadOptions {
    pub workers: usize,
    pub chunk_size: u64,
    pub retries: u32,
    pub backoff: Duration,
    pub kill_after_chunks: Option<u64>,
}

impl Default for UploadOptions {
    fn default() -> Self {
        UploadOptions {
            workers: DEFAULT_WORKERS,
            chunk_size: DEFAULT_CHUNK_SIZE,
            retries: DEFAULT_RETRIES,
            backoff: Duration::from_millis(200),
            kill_after_chunks: None,
        }
    }
}

impl UploadOptions {
    pub fn from_env(mut self) -> Self {
        if let Some(n) = std::env::var(KILL_AFTER_ENV).ok().and_then(|v| v.parse().ok()) {
            self.kill_after_chunks = Some(n);
        }
        if let Some(ms) = std::env::var(BACKOFF_ENV).ok().and_then(|v| v.parse().ok()) {
            self.backoff = Duration::from_millis(ms);
        }
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct UploadSummary {
    pub manifest_id: String,
    pub verified: u64,
    pub failed: u64,
    pub pending: u64,
    pub resumed_from_bytes: u64,
    pub uploaded_bytes: u64,
    pub offset_mismatches: u64,
    pub complete: bool,
    pub failures: Vec<String>,
}

struct Run<'a> {
    api: &'a Api,
    manifest: String,
    opts: &'a UploadOptions,
    ledger: Mutex<Ledger>,
    ledger_dir: &'a Path,
    chunks: AtomicU64,
    uploaded: AtomicU64,
    mismatches: AtomicU64,
    failures: Mutex<Vec<String>>,
}

impl Run<'_> {
    fn record(&self, path: &str, status: EntryStatus, bytes: u64) -> Result<()> {
        let mut ledger = self.ledger.lock().unwrap();
        if let Some(e) = ledger.entry_mut(path) {
            e.status = status;
            e.bytes_received = bytes;
        }
        ledger.save(self.ledger_dir)
    }

    fn fail(&self, path: &str, why: String) {
        eprintln!("{path}: {why}");
        self.failures.lock().unwrap().push(format!("{path}: {why}"));
        let mut ledger = self.ledger.lock().unwrap();
        if let Some(e) = ledger.entry_mut(path) {
            e.status = EntryStatus::Failed;
        }
        let _ = ledger.save(self.ledger_dir);
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match call() {
                Err(e) if e.is_retryable() && attempt < self.opts.retries => {
                    std::thread::sleep(self.opts.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
                other => return other,
            }
        }
    }

    fn send_chunks(&self, entry: &EntryView, source: &Path) -> Result<()> {
        let mut file = File::open(source)?;
        let mut offset = entry.resume_offset;
        while offset < entry.declared_size {
            let len = self.opts.chunk_size.min(entry.declared_size - offset);
            file.seek(SeekFrom::Start(offset))?;
            let mut buf = Vec::with_capacity(len as usize);
            (&mut file).take(len).read_to_end(&mut buf)?;
            if buf.is_empty() {
                return Err(AgentError::Local(format!("{} is shorter than declared", source.display())));
            }
            let sent = buf.len() as u64;
            let result = self.with_retries(|| self.api.put_chunk::<ChunkAck>(&self.manifest, &entry.path, offset, buf.clone()));
            match result {
                Ok(ack) => {
                    offset = ack.bytes_received;
                    self.uploaded.fetch_add(sent, Ordering::Relaxed);
                    self.record(&entry.path, ack.status, ack.bytes_received)?;
                    let done = self.chunks.fetch_add(1, Ordering::SeqCst) + 1;
                    if self.opts.kill_after_chunks.is_some_and(|n| done >= n) {
                        std::process::exit(137);
                    }
                }
                Err(AgentError::Server { code, body, .. }) if code == "OffsetMismatch" => {
                    self.mismatches.fetch_add(1, Ordering::Relaxed);
                    offset = body["expected_offset"]
                        .as_u64()
                        .ok_or_else(|| AgentError::Local("OffsetMismatch without expected_offset".into()))?;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    fn upload_entry(&self, entry: &EntryView) {
        let source = {
            let ledger = self.ledger.lock().unwrap();
            ledger.entries.iter().find(|e| e.path == entry.path).map(|e| e.source.clone())
        };
        let Some(source) = source else {
            self.fail(&entry.path, "not in the local ledger".into());
            return;
        };
        if let Err(e) = self.send_chunks(entry, &source) {
            self.fail(&entry.path, e.to_string());
            return;
        }
        match self.with_retries(|| self.api.entry_action::<FinalizeOutcome>(&self.manifest, &entry.path, "finalize")) {
            Ok(out) if out.status == EntryStatus::Verified => {
                let _ = self.record(&entry.path, EntryStatus::Verified, entry.declared_size);
            }
            Ok(out) => {
                let why = match out.mismatch {
                    Some(m) => format!("checksum mismatch: declared {} but received {}", m.expected, m.actual),
                    None => format!("finalize left the entry {:?}", out.status),
                };
                self.fail(&entry.path, why);
            }
            Err(e) => self.fail(&entry.path, e.to_string()),
        }
    }
}

/// Sync the ledger with the server, then upload and finalize every entry
/// that is not yet verified.
pub fn upload(api: &Api, ledger_dir: &Path, manifest: &str, opts: &UploadOptions) -> Result<UploadSummary> {
    let mut ledger = Ledger::load(ledger_dir, manifest)?;
    let view: SyncView = api.post(
        &format!("/v1/manifests/{manifest}/sync"),
        &json!({ "entries": ledger.client_views() }),
    )?;
    let changed = ledger.reconcile(&view);
    if !changed.is_empty() {
        eprintln!("adopted server state for {} entries", changed.len());
    }
    ledger.save(ledger_dir)?;

    let mut work = VecDeque::new();
    let mut resumed = 0;
    for entry in view.entries.iter().filter(|e| e.status != EntryStatus::Verified) {
        let mut entry = entry.clone();
        if entry.status == EntryStatus::Failed {
            let ack: ChunkAck = api.entry_action(manifest, &entry.path, "reset")?;
            entry.status = ack.status;
            entry.bytes_received = ack.bytes_received;
            entry.resume_offset = ack.bytes_received;
            if let Some(e) = ledger.entry_mut(&entry.path) {
                e.status = ack.status;
                e.bytes_received = ack.bytes_received;
            }
        }
        resumed += entry.resume_offset;
        work.push_back(entry);
    }
    ledger.save(ledger_dir)?;

    let run = Run {
        api,
        manifest: manifest.to_string(),
        opts,
        ledger: Mutex::new(ledger),
        ledger_dir,
        chunks: AtomicU64::new(0),
        uploaded: AtomicU64::new(0),
        mismatches: AtomicU64::new(0),
        failures: Mutex::new(Vec::new()),
    };
    let queue = Mutex::new(work);
    std::thread::scope(|scope| {
        for _ in 0..opts.workers.max(1) {
            scope.spawn(|| loop {
                let Some(entry) = queue.lock().unwrap().pop_front() else { break };
                run.upload_entry(&entry);
            });
        }
    });

    let verification: Verification = api.post(&format!("/v1/manifests/{manifest}/verify"), &json!({}))?;
    let after: SyncView = api.post(&format!("/v1/manifests/{manifest}/sync"), &json!({ "entries": [] }))?;
    let mut ledger = run.ledger.into_inner().unwrap();
    ledger.reconcile(&after);
    ledger.save(ledger_dir)?;
    Ok(UploadSummary {
        manifest_id: manifest.to_string(),
        verified: verification.verified,
        failed: verification.failed,
        pending: verification.pending,
        resumed_from_bytes: resumed,
        uploaded_bytes: run.uploaded.into_inner(),
        offset_mismatches: run.mismatches.into_inner(),
        complete: verification.complete,
        failures: run.failures.into_inner().unwrap(),
    })
}
