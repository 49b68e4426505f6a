#![allow(dead_code)]

use std::path::Path;

use fairhaven_server::{Config, Server};
use reqwest::{Client, Method, RequestBuilder, Response, StatusCode};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const OWNER: &str = "t-owner";
pub const REVIEWER: &str = "t-reviewer";
pub const MANAGER: &str = "t-manager";
pub const EDITOR: &str = "t-editor";
pub const VIEWER: &str = "t-viewer";
pub const STRANGER: &str = "t-stranger";
pub const ADMIN: &str = "t-admin";

pub fn config_text() -> String {
    let mut text = String::from("clock = \"manual\"\n[webhooks]\ntime_unit_ms = 20\ntimeout_ms = 2000\n");
    for (name, token, admin) in [
        ("owner", OWNER, false),
        ("reviewer", REVIEWER, false),
        ("manager", MANAGER, false),
        ("editor", EDITOR, false),
        ("viewer", VIEWER, false),
        ("stranger", STRANGER, false),
        ("admin", ADMIN, true),
    ] {
        text.push_str(&format!(
            "[[users]]\nname = \"{name}\"\nemail = \"{name}@example.org\"\ntoken = \"{token}\"\nadmin = {admin}\n"
        ));
    }
    text.push_str(
        "[[workspaces]]\nname = \"lab\"\nmembers = [\"owner@example.org\", \"manager@example.org\", \"editor@example.org\", \"viewer@example.org\", \"stranger@example.org\"]\npublishers = [\"reviewer@example.org\"]\n",
    );
    text
}

pub struct TestServer {
    pub base: String,
    pub client: Client,
    pub handle: tokio::task::JoinHandle<std::io::Result<()>>,
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

pub async fn start(data_dir: Option<&Path>) -> TestServer {
    let mut config = Config::from_toml(&config_text()).unwrap();
    config.data_dir = data_dir.map(Path::to_path_buf);
    let server = Server::open(config).unwrap();
    let (addr, handle) = server.spawn("127.0.0.1:0").await.unwrap();
    TestServer {
        base: format!("http://{addr}"),
        client: Client::builder().redirect(reqwest::redirect::Policy::none()).build().unwrap(),
        handle,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl TestServer {
    pub fn req(&self, method: Method, path: &str, token: Option<&str>) -> RequestBuilder {
        let rb = self.client.request(method, format!("{}{path}", self.base));
        match token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    pub async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> Response {
        let mut rb = self.req(method, path, token);
        if let Some(body) = body {
            rb = rb.json(&body);
        }
        rb.send().await.unwrap()
    }

    /// Call and require `expect`, returning the JSON body (null when empty).
    pub async fn expect(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>, expect: StatusCode) -> Value {
        let resp = self.call(method.clone(), path, token, body).await;
        let status = resp.status();
        let text = resp.text().await.unwrap();
        assert_eq!(status, expect, "{method} {path}: {text}");
        if text.is_empty() {
            Value::Null
        } else {
            serde_json::from_str(&text).unwrap_or(Value::String(text))
        }
    }

    pub async fn get(&self, path: &str, token: Option<&str>) -> Value {
        self.expect(Method::GET, path, token, None, StatusCode::OK).await
    }

    pub async fn post(&self, path: &str, token: &str, body: Value) -> Value {
        let resp = self.call(Method::POST, path, Some(token), Some(body)).await;
        let status = resp.status();
        let text = resp.text().await.unwrap();
        assert!(status.is_success(), "POST {path}: {status} {text}");
        serde_json::from_str(&text).unwrap_or(Value::Null)
    }

    pub async fn user_id(&self, token: &str) -> String {
        self.get("/v1/me", Some(token)).await["id"].as_str().unwrap().to_string()
    }

    pub async fn workspace(&self) -> String {
        let list = self.get("/v1/workspaces", Some(OWNER)).await;
        list[0]["id"].as_str().unwrap().to_string()
    }

    /// A dataset owned by OWNER with manager, editor and viewer grants.
    pub async fn dataset(&self, name: &str) -> String {
        let ws = self.workspace().await;
        let ds = self.post("/v1/datasets", OWNER, json!({"workspace_id": ws, "name": name})).await;
        let id = ds["id"].as_str().unwrap().to_string();
        for (token, role) in [(MANAGER, "manager"), (EDITOR, "editor"), (VIEWER, "viewer")] {
            let user = self.user_id(token).await;
            self.post(
                &format!("/v1/datasets/{id}/grants"),
                OWNER,
                json!({"principal": {"type": "user", "id": user}, "role": role}),
            )
            .await;
        }
        id
    }

    pub async fn complete_attributes(&self, ds: &str, tags: &[&str]) {
        self.expect(
            Method::PATCH,
            &format!("/v1/datasets/{ds}"),
            Some(OWNER),
            Some(json!({
                "subtitle": "A subtitle",
                "description": "Recordings from the study",
                "license": "CC-BY-4.0",
                "tags": tags,
                "contributors": [{"name": "A. Researcher", "affiliation": "Lab"}]
            })),
            StatusCode::OK,
        )
        .await;
    }

    /// Upload whole files through a fresh manifest in one chunk each.
    pub async fn upload(&self, ds: &str, token: &str, files: &[(&str, &[u8])]) -> String {
        let entries: Vec<Value> = files
            .iter()
            .map(|(p, b)| json!({"path": p, "size": b.len(), "checksum": sha256_hex(b)}))
            .collect();
        let m = self.post(&format!("/v1/datasets/{ds}/manifests"), token, json!({"entries": entries})).await;
        let mid = m["id"].as_str().unwrap().to_string();
        for (path, bytes) in files {
            if !bytes.is_empty() {
                let resp = self
                    .req(Method::PUT, &format!("/v1/manifests/{mid}/chunks"), Some(token))
                    .query(&[("path", *path), ("offset", "0")])
                    .body(bytes.to_vec())
                    .send()
                    .await
                    .unwrap();
                assert_eq!(resp.status(), StatusCode::OK, "{}", resp.text().await.unwrap());
            }
            let enc = urlencode(path);
            let out = self.post(&format!("/v1/manifests/{mid}/entries/{enc}/finalize"), token, json!({})).await;
            assert_eq!(out["status"], "verified", "{out}");
        }
        mid
    }

    /// Submit, accept and publish; returns the version JSON.
    pub async fn publish(&self, ds: &str, embargo_days: u32) -> Value {
        let req = self.post(&format!("/v1/datasets/{ds}/publication"), OWNER, json!({})).await;
        let rid = req["id"].as_str().unwrap().to_string();
        self.post(&format!("/v1/publication/{rid}/claim"), REVIEWER, json!({})).await;
        self.post(&format!("/v1/publication/{rid}/review"), REVIEWER, json!({"decision": "accept"})).await;
        self.post(&format!("/v1/publication/{rid}/publish"), REVIEWER, json!({"embargo_days": embargo_days})).await
    }

    pub async fn advance_days(&self, days: i64) {
        self.post("/v1/admin/clock", ADMIN, json!({"advance_days": days})).await;
    }

    pub async fn sweep(&self) -> Value {
        self.post("/v1/admin/sweep", ADMIN, json!({})).await
    }
}

pub fn urlencode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}
