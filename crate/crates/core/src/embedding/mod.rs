//! Sentence embeddings behind a provider contract.
//!
//! Two providers exist: an HTTP batch client for a real sentence encoder and
//! a hashed bag-of-words embedder that needs no network or model weights.
//! Every vector handed out is L2-normalized (or all zeros).

mod hashed;
mod http;

use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use hashed::HashedLexicalEmbedder;
pub use http::HttpEmbedder;

pub const DEFAULT_DIMENSION: usize = 384;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("text {0} is empty")]
    EmptyText(usize),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("embedding provider returned {got} vectors for {sent} texts")]
    CountMismatch { sent: usize, got: usize },
    #[error("embedding provider returned a non-finite value")]
    NonFinite,
    #[error("embedding transport error: {0}")]
    Transport(String),
    #[error("embedding provider answered HTTP {0}")]
    Status(u16),
    #[error("invalid embedding config: {0}")]
    Config(String),
    #[error("no candidates to rank")]
    NoCandidates,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Wraps raw values, scaling them to unit length (zero stays zero).
    pub fn normalized(mut values: Vec<f64>) -> Result<Self, EmbedError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        let norm = l2(&values);
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(EmbeddingVector(values))
    }

    /// Wraps values without normalizing.
    pub fn raw(values: Vec<f64>) -> Self {
        EmbeddingVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dimension(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        l2(&self.0)
    }
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `dot(a, b) / (|a| |b|)`, or 0 when either vector is zero.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dimension() != b.dimension() {
        return Err(EmbedError::DimensionMismatch { expected: a.dimension(), actual: b.dimension() });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

pub trait Embedder: Send + Sync {
    fn dimension(&self) -> usize;

    /// One vector per text, in input order.
    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError>;
}

/// Candidates ranked by cosine similarity to `query`, best first. Equal
/// scores keep candidate order. Query and candidates go out in one batch.
pub fn rank_by_similarity<S: AsRef<str>>(
    embedder: &dyn Embedder,
    query: &str,
    candidates: &[S],
) -> Result<Vec<(usize, f64)>, EmbedError> {
    if candidates.is_empty() {
        return Err(EmbedError::NoCandidates);
    }
    let mut batch: Vec<&str> = Vec::with_capacity(candidates.len() + 1);
    batch.push(query);
    batch.extend(candidates.iter().map(AsRef::as_ref));
    let vectors = embedder.embed(&batch)?;
    let (q, rest) = vectors.split_first().expect("batch is non-empty");
    let mut scored = rest
        .iter()
        .enumerate()
        .map(|(i, v)| cosine(q, v).map(|s| (i, s)))
        .collect::<Result<Vec<_>, _>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Http,
    HashedLexical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingProviderConfig {
    pub kind: EmbeddingKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    pub dimension: usize,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl Default for EmbeddingProviderConfig {
    fn default() -> Self {
        EmbeddingProviderConfig {
            kind: EmbeddingKind::HashedLexical,
            endpoint_url: None,
            dimension: DEFAULT_DIMENSION,
            timeout_ms: 30_000,
            max_in_flight: 4,
        }
    }
}

impl EmbeddingProviderConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dimension < 8 {
            return Err(EmbedError::Config(format!("dimension must be >= 8, got {}", self.dimension)));
        }
        if self.kind == EmbeddingKind::Http && self.endpoint_url.is_none() {
            return Err(EmbedError::Config("http embedding provider requires endpoint_url".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

pub fn build_embedder(cfg: &EmbeddingProviderConfig) -> Result<Box<dyn Embedder>, EmbedError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        EmbeddingKind::HashedLexical => Box::new(HashedLexicalEmbedder::new(cfg.dimension)),
        EmbeddingKind::Http => Box::new(HttpEmbedder::new(cfg)?),
    })
}

pub(crate) fn check_non_empty(texts: &[&str]) -> Result<(), EmbedError> {
    match texts.iter().position(|t| t.trim().is_empty()) {
        Some(i) => Err(EmbedError::EmptyText(i)),
        None => Ok(()),
    }
}
