use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::QualityError;
use crate::text::words;

/// Sparse vector with entries sorted by column.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v * v).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|(_, v)| *v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector { entries: self.entries.iter().map(|&(i, v)| (i, v * factor)).collect() }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn get(&self, column: usize) -> f64 {
        self.entries
            .binary_search_by_key(&column, |e| e.0)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }
}

/// TF-IDF with smoothed idf `ln((1 + N) / (1 + df)) + 1` and L2-normalized
/// output. The vocabulary keeps the `max_features` terms with the highest
/// document frequency (ties go to the lexicographically smaller term);
/// columns follow lexicographic term order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfVectorizer {
    pub(crate) vocabulary: BTreeMap<String, usize>,
    pub(crate) idf: Vec<f64>,
    pub(crate) max_features: usize,
    pub(crate) lowercase: bool,
}

impl TfidfVectorizer {
    pub fn fit<S: AsRef<str>>(docs: &[S], max_features: usize, lowercase: bool) -> Result<Self, QualityError> {
        if docs.is_empty() {
            return Err(QualityError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in docs {
            let unique: BTreeSet<String> = words(doc.as_ref(), lowercase).into_iter().collect();
            for t in unique {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, usize)> = df.into_iter().collect();
        // BTreeMap iteration is already lexicographic; a stable sort on df keeps that as the tie order.
        ranked.sort_by_key(|t| std::cmp::Reverse(t.1));
        ranked.truncate(max_features);
        ranked.sort_by(|a, b| a.0.cmp(&b.0));

        let n = docs.len() as f64;
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(ranked.len());
        for (col, (term, count)) in ranked.into_iter().enumerate() {
            idf.push(((1.0 + n) / (1.0 + count as f64)).ln() + 1.0);
            vocabulary.insert(term, col);
        }
        Ok(TfidfVectorizer { vocabulary, idf, max_features, lowercase })
    }

    pub fn transform(&self, doc: &str) -> SparseVector {
        let mut tf: BTreeMap<usize, f64> = BTreeMap::new();
        for w in words(doc, self.lowercase) {
            if let Some(&col) = self.vocabulary.get(&w) {
                *tf.entry(col).or_insert(0.0) += 1.0;
            }
        }
        let raw = SparseVector { entries: tf.into_iter().map(|(c, n)| (c, n * self.idf[c])).collect() };
        let norm = raw.norm();
        if norm == 0.0 {
            return SparseVector::default();
        }
        raw.scaled(1.0 / norm)
    }

    pub fn vocabulary(&self) -> &BTreeMap<String, usize> {
        &self.vocabulary
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocabulary.get(term).map(|&c| self.idf[c])
    }

    pub fn num_features(&self) -> usize {
        self.idf.len()
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }
}
