#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairhaven_server::{Config, Server};
use reqwest::blocking::Client;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use tempfile::TempDir;

pub const OWNER: &str = "t-owner";
pub const REVIEWER: &str = "t-reviewer";
pub const STRANGER: &str = "t-stranger";
pub const ADMIN: &str = "t-admin";

const CONFIG: &str = r#"
clock = "manual"

[[users]]
name = "Owner"
email = "owner@example.org"
token = "t-owner"

[[users]]
name = "Reviewer"
email = "reviewer@example.org"
token = "t-reviewer"

[[users]]
name = "Stranger"
email = "stranger@example.org"
token = "t-stranger"

[[users]]
name = "Admin"
email = "admin@example.org"
token = "t-admin"
admin = true

[[workspaces]]
name = "lab"
members = ["owner@example.org", "stranger@example.org"]
publishers = ["reviewer@example.org"]
"#;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An in-process server plus a scratch config directory for `fh`.
pub struct Env {
    pub rt: tokio::runtime::Runtime,
    pub base: String,
    pub config: TempDir,
    pub work: TempDir,
    pub data: Option<TempDir>,
    pub http: Client,
}

impl Env {
    pub fn new() -> Env {
        Self::start(false)
    }

    pub fn persistent() -> Env {
        Self::start(true)
    }

    fn start(persist: bool) -> Env {
        let rt = tokio::runtime::Runtime::new().unwrap();
        let data = persist.then(|| tempfile::tempdir().unwrap());
        let mut config = Config::from_toml(CONFIG).unwrap();
        config.data_dir = data.as_ref().map(|d| d.path().to_path_buf());
        let addr = rt.block_on(async {
            let server = Server::open(config).unwrap();
            server.spawn("127.0.0.1:0").await.unwrap().0
        });
        let env = Env {
            rt,
            base: format!("http://{addr}"),
            config: tempfile::tempdir().unwrap(),
            work: tempfile::tempdir().unwrap(),
            data,
            http: Client::builder().redirect(reqwest::redirect::Policy::none()).build().unwrap(),
        };
        env.use_token("owner", OWNER);
        env
    }

    pub fn use_token(&self, name: &str, token: &str) {
        let out = self.fh(&["profile", "add", name, "--server", &self.base, "--token", token]);
        assert!(out.status.success(), "{}", stderr(&out));
        let out = self.fh(&["profile", "use", name]);
        assert!(out.status.success(), "{}", stderr(&out));
    }

    pub fn fh_with(&self, args: &[&str], envs: &[(&str, &str)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_fh"));
        cmd.args(args)
            .env("FH_CONFIG_DIR", self.config.path())
            .env("FH_RETRY_BACKOFF_MS", "5")
            .env_remove("FH_FAULT_KILL_AFTER_CHUNKS");
        for (k, v) in envs {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }

    pub fn fh(&self, args: &[&str]) -> Output {
        self.fh_with(args, &[])
    }

    pub fn fh_json(&self, args: &[&str]) -> (i32, Value) {
        let mut all = vec!["--json"];
        all.extend_from_slice(args);
        let out = self.fh(&all);
        let code = out.status.code().unwrap_or(-1);
        let value = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
        (code, value)
    }

    pub fn call(&self, method: reqwest::Method, path: &str, token: &str, body: Option<Value>) -> Value {
        let mut rb = self.http.request(method.clone(), format!("{}{path}", self.base)).bearer_auth(token);
        if let Some(b) = body {
            rb = rb.json(&b);
        }
        let resp = rb.send().unwrap();
        let status = resp.status();
        let text = resp.text().unwrap();
        assert!(status.is_success(), "{method} {path}: {status} {text}");
        serde_json::from_str(&text).unwrap_or(Value::Null)
    }

    pub fn get(&self, path: &str, token: &str) -> Value {
        self.call(reqwest::Method::GET, path, token, None)
    }

    pub fn post(&self, path: &str, token: &str, body: Value) -> Value {
        self.call(reqwest::Method::POST, path, token, Some(body))
    }

    pub fn dataset(&self, name: &str) -> String {
        let ws = self.get("/v1/workspaces", OWNER)[0]["id"].as_str().unwrap().to_string();
        let ds = self.post("/v1/datasets", OWNER, json!({"workspace_id": ws, "name": name}));
        let id = ds["id"].as_str().unwrap().to_string();
        self.call(
            reqwest::Method::PATCH,
            &format!("/v1/datasets/{id}"),
            OWNER,
            Some(json!({
                "subtitle": "s",
                "description": "d",
                "license": "CC0-1.0",
                "tags": ["agent"],
                "contributors": [{"name": "A. Researcher"}]
            })),
        );
        id
    }

    pub fn publish(&self, ds: &str, embargo_days: u32) -> Value {
        let req = self.post(&format!("/v1/datasets/{ds}/publication"), OWNER, json!({}));
        let rid = req["id"].as_str().unwrap().to_string();
        self.post(&format!("/v1/publication/{rid}/review"), REVIEWER, json!({"decision": "accept"}));
        self.post(&format!("/v1/publication/{rid}/publish"), REVIEWER, json!({"embargo_days": embargo_days}))
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> PathBuf {
        let path = self.work.path().join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, bytes).unwrap();
        path
    }

    pub fn ledger_file(&self, manifest: &str) -> PathBuf {
        self.config.path().join("ledgers").join(format!("{manifest}.json"))
    }

    pub fn server_file(&self, ds: &str, path: &str) -> Vec<u8> {
        self.http
            .get(format!("{}/v1/datasets/{ds}/files/{path}", self.base))
            .bearer_auth(OWNER)
            .send()
            .unwrap()
            .bytes()
            .unwrap()
            .to_vec()
    }

    pub fn data_dir(&self) -> &Path {
        self.data.as_ref().unwrap().path()
    }
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Deterministic pseudo-random bytes.
pub fn bytes(seed: u64, len: usize) -> Vec<u8> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    (0..len)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state as u8
        })
        .collect()
}
