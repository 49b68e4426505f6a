use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("{0}")]
    Local(String),
    #[error("network: {0}")]
    Network(String),
    #[error("server rejected the request ({status} {code}): {message}")]
    Server { status: u16, code: String, message: String, body: Value },
    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T, E = AgentError> = std::result::Result<T, E>;

impl AgentError {
    /// 0 success, 1 local error, 2 server rejection, 3 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            AgentError::Local(_) | AgentError::Network(_) => 1,
            AgentError::Server { .. } => 2,
            AgentError::Verification(_) => 3,
        }
    }

    pub fn is_retryable(&self) -> bool {
        match self {
            AgentError::Network(_) => true,
            AgentError::Server { status, .. } => *status >= 500,
            _ => false,
        }
    }

    pub fn server_code(&self) -> Option<&str> {
        match self {
            AgentError::Server { code, .. } => Some(code),
            _ => None,
        }
    }
}

impl From<std::io::Error> for AgentError {
    fn from(e: std::io::Error) -> Self {
        AgentError::Local(e.to_string())
    }
}

impl From<reqwest::Error> for AgentError {
    fn from(e: reqwest::Error) -> Self {
        AgentError::Network(e.to_string())
    }
}

impl From<serde_json::Error> for AgentError {
    fn from(e: serde_json::Error) -> Self {
        AgentError::Local(format!("malformed JSON: {e}"))
    }
}
