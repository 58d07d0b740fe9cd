use serde::{de::DeserializeOwned, Serialize};
use std::time::Duration;

/// Failure talking to an external JSON service.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{endpoint}: {message}")]
pub struct HttpFailure {
    pub endpoint: String,
    /// HTTP status when the server answered; `None` for transport errors.
    pub status: Option<u16>,
    pub message: String,
}

impl HttpFailure {
    /// Transport errors, 429 and 5xx are worth retrying.
    pub fn retriable(&self) -> bool {
        match self.status {
            None => true,
            Some(s) => s == 429 || s >= 500,
        }
    }
}

pub(crate) struct JsonClient {
    client: reqwest::blocking::Client,
    endpoint: String,
    bearer: Option<String>,
}

impl JsonClient {
    pub(crate) fn new(endpoint: impl Into<String>, bearer: Option<String>, timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("reqwest client");
        JsonClient {
            client,
            endpoint: endpoint.into(),
            bearer,
        }
    }

    pub(crate) fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub(crate) fn post<B: Serialize, R: DeserializeOwned>(&self, body: &B) -> Result<R, HttpFailure> {
        let fail = |status, message: String| HttpFailure {
            endpoint: self.endpoint.clone(),
            status,
            message,
        };
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(token) = &self.bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| fail(None, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(fail(Some(status.as_u16()), format!("status {status}: {text}")));
        }
        resp.json::<R>()
            .map_err(|e| fail(Some(status.as_u16()), format!("bad response body: {e}")))
    }
}
