//! `POST {endpoint}` with `{"messages": [...], "temperature": t,
//! "max_tokens": m}`, expecting `200 {"text": "..."}`.

use serde::Deserialize;

use super::{CallKey, ChatProvider, GenAiError, GenerationRequest, ProviderConfig};
use crate::limiter::InflightLimiter;
use crate::transport::{self, TransportError};

#[derive(Deserialize)]
struct ChatResponse {
    text: String,
}

pub struct HttpChatProvider {
    url: String,
    agent: ureq::Agent,
    limiter: InflightLimiter,
}

impl HttpChatProvider {
    pub fn new(cfg: &ProviderConfig) -> Result<Self, GenAiError> {
        let url = cfg
            .endpoint_url
            .clone()
            .ok_or_else(|| GenAiError::Config("http_chat provider requires endpoint_url".into()))?;
        Ok(HttpChatProvider { url, agent: transport::agent(cfg.timeout()), limiter: InflightLimiter::new(cfg.max_in_flight) })
    }
}

impl ChatProvider for HttpChatProvider {
    fn complete(&self, key: &CallKey, request: &GenerationRequest) -> Result<String, GenAiError> {
        let _permit = self.limiter.acquire();
        let resp: ChatResponse = transport::post_json(&self.agent, &self.url, request).map_err(|e| match e {
            TransportError::Status(status) => GenAiError::Status { key: key.to_string(), status },
            other => GenAiError::Transport { key: key.to_string(), message: other.to_string() },
        })?;
        Ok(resp.text)
    }
}
