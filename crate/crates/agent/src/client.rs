use std::time::Duration;

use reqwest::blocking::{Client, RequestBuilder, Response};
use reqwest::Method;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{AgentError, Result};

pub const PAYER_HEADER: &str = "x-fairhaven-payer";

/// Thin blocking client over the REST API.
#[derive(Debug, Clone)]
pub struct Api {
    base: String,
    token: String,
    payer: Option<String>,
    http: Client,
}

fn url_segment(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}

impl Api {
    pub fn new(base: &str, token: &str) -> Result<Api> {
        let http = Client::builder()
            .redirect(reqwest::redirect::Policy::none())
            .timeout(Duration::from_secs(300))
            .build()?;
        Ok(Api {
            base: base.trim_end_matches('/').to_string(),
            token: token.to_string(),
            payer: None,
            http,
        })
    }

    pub fn with_payer(mut self, payer: Option<String>) -> Api {
        self.payer = payer;
        self
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let rb = self.http.request(method, format!("{}{path}", self.base)).bearer_auth(&self.token);
        match &self.payer {
            Some(p) => rb.header(PAYER_HEADER, p),
            None => rb,
        }
    }

    fn send(rb: RequestBuilder) -> Result<Response> {
        let resp = rb.send()?;
        let status = resp.status();
        if status.is_success() || status.is_redirection() {
            return Ok(resp);
        }
        let text = resp.text().unwrap_or_default();
        let body: Value = serde_json::from_str(&text).unwrap_or(Value::String(text.clone()));
        let code = body["error"].as_str().unwrap_or("HttpError").to_string();
        let mut message = body["message"].as_str().unwrap_or(&text).to_string();
        if code == "PendingRestore" {
            message.push_str("; the data is being restored from archive, retry later");
        }
        Err(AgentError::Server {
            status: status.as_u16(),
            code,
            message,
            body,
        })
    }

    pub fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T> {
        Ok(Self::send(self.request(Method::GET, path))?.json()?)
    }

    pub fn post<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T> {
        Ok(Self::send(self.request(Method::POST, path).json(body))?.json()?)
    }

    pub fn put<T: DeserializeOwned>(&self, path: &str, body: &impl Serialize) -> Result<T> {
        Ok(Self::send(self.request(Method::PUT, path).json(body))?.json()?)
    }

    pub fn bytes(&self, path: &str) -> Result<Vec<u8>> {
        Ok(Self::send(self.request(Method::GET, path))?.bytes()?.to_vec())
    }

    pub fn put_chunk<T: DeserializeOwned>(&self, manifest: &str, path: &str, offset: u64, bytes: Vec<u8>) -> Result<T> {
        let rb = self
            .request(Method::PUT, &format!("/v1/manifests/{manifest}/chunks"))
            .query(&[("path", path.to_string()), ("offset", offset.to_string())])
            .body(bytes);
        Ok(Self::send(rb)?.json()?)
    }

    pub fn entry_action<T: DeserializeOwned>(&self, manifest: &str, path: &str, action: &str) -> Result<T> {
        self.post(
            &format!("/v1/manifests/{manifest}/entries/{}/{action}", url_segment(path)),
            &serde_json::json!({}),
        )
    }

    /// Location the server redirects a DOI to.
    pub fn resolve_doi(&self, doi: &str) -> Result<String> {
        let resp = Self::send(self.request(Method::GET, &format!("/doi/{doi}")))?;
        resp.headers()
            .get(reqwest::header::LOCATION)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
            .ok_or_else(|| AgentError::Local(format!("DOI {doi} did not redirect")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segments_escape_slashes_and_spaces() {
        assert_eq!(url_segment("raw/sub 01.edf"), "raw%2Fsub%2001.edf");
        assert_eq!(url_segment("a-b_c.d~"), "a-b_c.d~");
    }
}
