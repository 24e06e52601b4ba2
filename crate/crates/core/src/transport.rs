//! Blocking JSON-over-HTTP POST shared by the embedding and chat clients.

use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    #[error("{0}")]
    Transport(String),
    #[error("HTTP {0}")]
    Status(u16),
    #[error("malformed response body: {0}")]
    Decode(String),
}

pub(crate) fn agent(timeout: Duration) -> ureq::Agent {
    ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into()
}

pub(crate) fn post_json<B: Serialize, R: DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
    body: &B,
) -> Result<R, TransportError> {
    let mut resp = agent.post(url).send_json(body).map_err(|e| TransportError::Transport(e.to_string()))?;
    let status = resp.status().as_u16();
    if status != 200 {
        return Err(TransportError::Status(status));
    }
    resp.body_mut().read_json::<R>().map_err(|e| TransportError::Decode(e.to_string()))
}
