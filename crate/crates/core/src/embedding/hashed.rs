use super::{check_non_empty, EmbedError, Embedder, EmbeddingVector};
use crate::text::words;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SEED: u64 = 0x5eed_0000_0384_2023;

/// Seeded FNV-1a. Stable across platforms and releases.
fn bucket_hash(token: &str) -> u64 {
    let mut h = FNV_OFFSET ^ SEED;
    for byte in token.as_bytes() {
        h ^= u64::from(*byte);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Bag-of-words feature hashing: lowercase word counts folded into
/// `dimension` buckets, then L2-normalized. Word order is irrelevant.
#[derive(Debug, Clone)]
pub struct HashedLexicalEmbedder {
    dimension: usize,
}

impl HashedLexicalEmbedder {
    pub fn new(dimension: usize) -> Self {
        HashedLexicalEmbedder { dimension }
    }

    pub fn bucket(&self, token: &str) -> usize {
        (bucket_hash(token) % self.dimension as u64) as usize
    }

    fn embed_one(&self, text: &str) -> EmbeddingVector {
        let mut counts = vec![0.0f64; self.dimension];
        for w in words(text, true) {
            counts[self.bucket(&w)] += 1.0;
        }
        EmbeddingVector::normalized(counts).expect("counts are finite")
    }
}

impl Embedder for HashedLexicalEmbedder {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_non_empty(texts)?;
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}
