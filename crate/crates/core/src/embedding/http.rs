//! `POST {endpoint}` with `{"texts": [...]}`, expecting
//! `200 {"vectors": [[...], ...]}`.

use serde::{Deserialize, Serialize};

use super::{check_non_empty, EmbedError, Embedder, EmbeddingProviderConfig, EmbeddingVector};
use crate::limiter::InflightLimiter;
use crate::transport::{self, TransportError};

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
}

pub struct HttpEmbedder {
    url: String,
    dimension: usize,
    agent: ureq::Agent,
    limiter: InflightLimiter,
}

impl HttpEmbedder {
    pub fn new(cfg: &EmbeddingProviderConfig) -> Result<Self, EmbedError> {
        let url = cfg
            .endpoint_url
            .clone()
            .ok_or_else(|| EmbedError::Config("http embedding provider requires endpoint_url".into()))?;
        Ok(HttpEmbedder {
            url,
            dimension: cfg.dimension,
            agent: transport::agent(cfg.timeout()),
            limiter: InflightLimiter::new(cfg.max_in_flight),
        })
    }
}

impl Embedder for HttpEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_non_empty(texts)?;
        let resp: EmbedResponse = {
            let _permit = self.limiter.acquire();
            transport::post_json(&self.agent, &self.url, &EmbedRequest { texts }).map_err(|e| match e {
                TransportError::Status(code) => EmbedError::Status(code),
                other => EmbedError::Transport(other.to_string()),
            })?
        };
        if resp.vectors.len() != texts.len() {
            return Err(EmbedError::CountMismatch { sent: texts.len(), got: resp.vectors.len() });
        }
        resp.vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dimension {
                    return Err(EmbedError::DimensionMismatch { expected: self.dimension, actual: v.len() });
                }
                EmbeddingVector::normalized(v)
            })
            .collect()
    }
}
