use serde_json::{json, Value};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("rpc error {code}: {message}")]
    Rpc { code: i64, message: String },
    #[error("malformed response: {0}")]
    Malformed(String),
    #[error(transparent)]
    Http(#[from] reqwest::Error),
}

/// Minimal JSON-RPC 1.0 client.
pub struct RpcClient {
    url: String,
    http: reqwest::Client,
}

impl RpcClient {
    pub fn new(url: impl Into<String>) -> Self {
        RpcClient { url: url.into(), http: reqwest::Client::new() }
    }

    pub async fn call(&self, method: &str, params: Value) -> Result<Value, ClientError> {
        let body = json!({ "id": 1, "method": method, "params": params });
        let reply: Value = self.http.post(&self.url).json(&body).send().await?.json().await?;
        match reply.get("error") {
            Some(Value::Null) | None => reply.get("result").cloned().ok_or_else(|| ClientError::Malformed(reply.to_string())),
            Some(err) => Err(ClientError::Rpc {
                code: err.get("code").and_then(Value::as_i64).unwrap_or(0),
                message: err.get("message").and_then(Value::as_str).unwrap_or_default().to_string(),
            }),
        }
    }
}
