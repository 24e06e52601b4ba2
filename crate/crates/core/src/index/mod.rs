//! Inverted index with BM25 ranking.
//!
//! Scoring uses the non-negative IDF variant
//! `ln(1 + (N - df + 0.5) / (df + 0.5))` and the usual saturation
//! `tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))`. Long generated
//! answers are consumed as plain bags of words.

mod persist;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{CorpusError, Passage};
use crate::text::{data_lines, words};

pub use persist::{load_index, save_index, IndexBundle, INDEX_FORMAT, INDEX_VERSION};

const STOPWORDS: &str = include_str!("../../data/stopwords.txt");

/// The shipped 30-word English stopword list.
pub fn default_stopwords() -> &'static BTreeSet<String> {
    static SET: OnceLock<BTreeSet<String>> = OnceLock::new();
    SET.get_or_init(|| data_lines(STOPWORDS).map(str::to_string).collect())
}

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("cannot build an index over an empty corpus")]
    EmptyCorpus,
    #[error("invalid index config: {0}")]
    InvalidConfig(String),
    #[error("index file: {0}")]
    Format(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexConfig {
    /// Term-frequency saturation.
    pub k1: f64,
    /// Length normalization, in `[0, 1]`.
    pub b: f64,
    pub lowercase: bool,
    pub stopwords: BTreeSet<String>,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig { k1: 0.9, b: 0.4, lowercase: true, stopwords: default_stopwords().clone() }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<(), IndexError> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(IndexError::InvalidConfig(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(IndexError::InvalidConfig(format!("b must be in [0, 1], got {}", self.b)));
        }
        Ok(())
    }

    /// Tokens as indexed: Unicode words, optionally lowercased, stopwords removed.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        words(text, self.lowercase)
            .into_iter()
            .filter(|w| !self.stopwords.contains(w))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub ordinal: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchHit {
    pub passage_id: String,
    pub score: f64,
    pub rank: usize,
}

/// Immutable BM25 index. Postings are sorted by ordinal.
#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    config: IndexConfig,
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    ids: Vec<String>,
    ordinals: HashMap<String, u32>,
}

/// IDF with the `ln(1 + ...)` floor that keeps very common terms non-negative.
pub fn idf(doc_count: usize, df: usize) -> f64 {
    let n = doc_count as f64;
    let df = df as f64;
    (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
}

/// Contribution of one term, given its statistics in one document.
pub fn term_weight(tf: u32, doc_len: u32, avg_doc_length: f64, idf: f64, k1: f64, b: f64) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let tf = tf as f64;
    let norm = 1.0 - b + b * doc_len as f64 / avg_doc_length;
    idf * tf * (k1 + 1.0) / (tf + k1 * norm)
}

fn count_terms(cfg: &IndexConfig, text: &str) -> (BTreeMap<String, u32>, u32) {
    let tokens = cfg.tokenize(text);
    let len = tokens.len() as u32;
    let mut counts = BTreeMap::new();
    for t in tokens {
        *counts.entry(t).or_insert(0) += 1;
    }
    (counts, len)
}

impl InvertedIndex {
    /// Builds the index. Per-document counting runs in parallel; postings are
    /// merged in ordinal order so the result does not depend on thread count.
    pub fn build(passages: &[Passage], cfg: IndexConfig) -> Result<Self, IndexError> {
        cfg.validate()?;
        if passages.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let counted: Vec<(BTreeMap<String, u32>, u32)> =
            passages.par_iter().map(|p| count_terms(&cfg, &p.text)).collect();

        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(passages.len());
        for (ordinal, (counts, len)) in counted.into_iter().enumerate() {
            doc_lengths.push(len);
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { ordinal: ordinal as u32, tf });
            }
        }
        let ids: Vec<String> = passages.iter().map(|p| p.id.clone()).collect();
        Self::from_parts(cfg, postings, doc_lengths, ids)
    }

    pub(crate) fn from_parts(
        config: IndexConfig,
        postings: BTreeMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        ids: Vec<String>,
    ) -> Result<Self, IndexError> {
        if ids.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        if ids.len() != doc_lengths.len() {
            return Err(IndexError::Format("id and length tables differ in size".into()));
        }
        let n = ids.len() as u32;
        for (term, list) in &postings {
            if list.windows(2).any(|w| w[0].ordinal >= w[1].ordinal) || list.iter().any(|p| p.ordinal >= n || p.tf == 0) {
                return Err(IndexError::Format(format!("bad postings for term {term:?}")));
            }
        }
        let mut ordinals = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if ordinals.insert(id.clone(), i as u32).is_some() {
                return Err(IndexError::Format(format!("duplicate id {id}")));
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| l as u64).sum();
        let avg_doc_length = total as f64 / doc_lengths.len() as f64;
        Ok(InvertedIndex { config, postings, doc_lengths, avg_doc_length, ids, ordinals })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn doc_count(&self) -> usize {
        self.ids.len()
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, p)| (t.as_str(), p.as_slice()))
    }

    pub fn passage_id(&self, ordinal: usize) -> Option<&str> {
        self.ids.get(ordinal).map(String::as_str)
    }

    pub fn ordinal(&self, passage_id: &str) -> Option<usize> {
        self.ordinals.get(passage_id).map(|&o| o as usize)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    fn term_idf(&self, term: &str) -> f64 {
        let df = self.postings.get(term).map_or(0, Vec::len);
        idf(self.doc_count(), df)
    }

    fn tf(&self, term: &str, ordinal: u32) -> u32 {
        self.postings
            .get(term)
            .and_then(|list| list.binary_search_by_key(&ordinal, |p| p.ordinal).ok().map(|i| list[i].tf))
            .unwrap_or(0)
    }

    /// BM25 score of one document for a bag of query terms. Repeated query
    /// terms count once.
    ///
    /// Panics if `ordinal` is out of range.
    pub fn bm25_score<S: AsRef<str>>(&self, query_terms: &[S], ordinal: usize) -> f64 {
        assert!(ordinal < self.doc_count(), "ordinal {ordinal} out of range");
        let unique: BTreeSet<&str> = query_terms.iter().map(AsRef::as_ref).collect();
        let dl = self.doc_lengths[ordinal];
        unique
            .into_iter()
            .map(|t| {
                term_weight(self.tf(t, ordinal as u32), dl, self.avg_doc_length, self.term_idf(t), self.config.k1, self.config.b)
            })
            .sum()
    }

    /// Top `top_k` documents for `query_text`, by score descending then id
    /// ascending. Zero-score documents are omitted.
    pub fn search(&self, query_text: &str, top_k: usize) -> Vec<SearchHit> {
        let unique: BTreeSet<String> = self.config.tokenize(query_text).into_iter().collect();
        let mut scores = vec![0.0f64; self.doc_count()];
        let mut touched = vec![false; self.doc_count()];
        for term in &unique {
            let Some(list) = self.postings.get(term) else { continue };
            let term_idf = idf(self.doc_count(), list.len());
            for p in list {
                let o = p.ordinal as usize;
                scores[o] += term_weight(p.tf, self.doc_lengths[o], self.avg_doc_length, term_idf, self.config.k1, self.config.b);
                touched[o] = true;
            }
        }
        let mut hits: Vec<(usize, f64)> =
            (0..self.doc_count()).filter(|&o| touched[o] && scores[o] > 0.0).map(|o| (o, scores[o])).collect();
        hits.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| self.ids[a.0].cmp(&self.ids[b.0])));
        hits.truncate(top_k);
        hits.into_iter()
            .enumerate()
            .map(|(i, (o, score))| SearchHit { passage_id: self.ids[o].clone(), score, rank: i + 1 })
            .collect()
    }
}

/// Convenience wrapper over [`InvertedIndex::build`].
pub fn build_index(passages: &[Passage], cfg: IndexConfig) -> Result<InvertedIndex, IndexError> {
    InvertedIndex::build(passages, cfg)
}
