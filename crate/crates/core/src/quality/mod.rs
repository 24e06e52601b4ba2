//! Passage quality filter: TF-IDF features, three-way softmax regression,
//! and a keep-only-reliable pass over search hits.

mod logistic;
mod tfidf;
pub mod training;

use std::borrow::Borrow;
use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledDocument, Passage};
use crate::index::SearchHit;

pub use logistic::{train, Gradient, LogisticModel, TrainConfig, TrainReport, NUM_CLASSES};
pub use tfidf::{SparseVector, TfidfVectorizer};

pub const MODEL_FORMAT: &str = "grg-quality-filter";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QualityLabel {
    Reliable,
    Unreliable,
    Junk,
}

/// Fixed class order used for weight rows, probabilities and tie-breaking.
pub const CLASS_ORDER: [QualityLabel; NUM_CLASSES] =
    [QualityLabel::Reliable, QualityLabel::Unreliable, QualityLabel::Junk];

impl QualityLabel {
    pub fn class_index(self) -> usize {
        match self {
            QualityLabel::Reliable => 0,
            QualityLabel::Unreliable => 1,
            QualityLabel::Junk => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            QualityLabel::Reliable => "reliable",
            QualityLabel::Unreliable => "unreliable",
            QualityLabel::Junk => "junk",
        }
    }
}

impl std::fmt::Display for QualityLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("no training documents")]
    EmptyCorpus,
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("degenerate training set")]
    DegenerateTrainingSet,
    #[error("feature dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid filter config: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub max_features: usize,
    pub lowercase: bool,
    pub train: TrainConfig,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { max_features: 20_000, lowercase: true, train: TrainConfig::default() }
    }
}

/// A fitted vectorizer and model. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct QualityFilter {
    vectorizer: TfidfVectorizer,
    model: LogisticModel,
}

impl QualityFilter {
    pub fn new(vectorizer: TfidfVectorizer, model: LogisticModel) -> Result<Self, QualityError> {
        if vectorizer.num_features() != model.num_features() {
            return Err(QualityError::DimensionMismatch {
                expected: vectorizer.num_features(),
                actual: model.num_features(),
            });
        }
        Ok(QualityFilter { vectorizer, model })
    }

    /// Fits the vectorizer on the document texts, then trains the model.
    pub fn fit(docs: &[LabeledDocument], cfg: &FilterConfig) -> Result<(Self, TrainReport), QualityError> {
        let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
        let vectorizer = TfidfVectorizer::fit(&texts, cfg.max_features, cfg.lowercase)?;
        let xs: Vec<SparseVector> = texts.iter().map(|t| vectorizer.transform(t)).collect();
        let ys: Vec<QualityLabel> = docs.iter().map(|d| d.label).collect();
        let (model, report) = train(&cfg.train, vectorizer.num_features(), &xs, &ys)?;
        Ok((QualityFilter { vectorizer, model }, report))
    }

    pub fn vectorizer(&self) -> &TfidfVectorizer {
        &self.vectorizer
    }

    pub fn model(&self) -> &LogisticModel {
        &self.model
    }

    pub fn classify(&self, text: &str) -> (QualityLabel, [f64; NUM_CLASSES]) {
        self.model.predict(&self.vectorizer.transform(text))
    }

    /// Keeps only hits whose passage classifies as Reliable, in input order.
    pub fn filter_reliable<P: Borrow<Passage>>(&self, hits: Vec<(P, SearchHit)>) -> Vec<(P, SearchHit)> {
        hits.into_iter()
            .filter(|(p, _)| self.classify(&p.borrow().text).0 == QualityLabel::Reliable)
            .collect()
    }

    pub fn accuracy(&self, docs: &[LabeledDocument]) -> f64 {
        if docs.is_empty() {
            return 0.0;
        }
        let correct = docs.iter().filter(|d| self.classify(&d.text).0 == d.label).count();
        correct as f64 / docs.len() as f64
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            class_order: CLASS_ORDER.to_vec(),
            lowercase: self.vectorizer.lowercase,
            max_features: self.vectorizer.max_features,
            vocabulary: self.vectorizer.vocabulary.clone(),
            idf: self.vectorizer.idf.clone(),
            weights: self.model.weights.clone(),
            bias: self.model.bias.to_vec(),
            l2_lambda: self.model.l2_lambda,
            trained_epochs: self.model.trained_epochs,
        };
        serde_json::to_string(&file).expect("model serializes")
    }

    pub fn from_json(raw: &str) -> Result<Self, QualityError> {
        let f: ModelFile = serde_json::from_str(raw).map_err(|e| QualityError::Format(e.to_string()))?;
        if f.format != MODEL_FORMAT || f.version != MODEL_VERSION {
            return Err(QualityError::Format(format!("unsupported model {} v{}", f.format, f.version)));
        }
        if f.class_order != CLASS_ORDER {
            return Err(QualityError::Format(format!("unexpected class order {:?}", f.class_order)));
        }
        let v = f.idf.len();
        let cols_ok = f.vocabulary.len() == v && {
            let mut cols: Vec<usize> = f.vocabulary.values().copied().collect();
            cols.sort_unstable();
            cols.iter().enumerate().all(|(i, &c)| i == c)
        };
        if !cols_ok {
            return Err(QualityError::Format("vocabulary columns do not match idf table".into()));
        }
        if f.weights.len() != NUM_CLASSES || f.weights.iter().any(|row| row.len() != v) || f.bias.len() != NUM_CLASSES {
            return Err(QualityError::Format("weight matrix shape mismatch".into()));
        }
        if f.weights.iter().flatten().chain(&f.bias).chain(&f.idf).any(|x| !x.is_finite()) {
            return Err(QualityError::Format("non-finite parameter".into()));
        }
        let vectorizer =
            TfidfVectorizer { vocabulary: f.vocabulary, idf: f.idf, max_features: f.max_features, lowercase: f.lowercase };
        let model = LogisticModel {
            weights: f.weights,
            bias: [f.bias[0], f.bias[1], f.bias[2]],
            l2_lambda: f.l2_lambda,
            trained_epochs: f.trained_epochs,
        };
        QualityFilter::new(vectorizer, model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), QualityError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|source| QualityError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, QualityError> {
        let path = path.as_ref();
        let raw = std::fs::read_to_string(path)
            .map_err(|source| QualityError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&raw)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    class_order: Vec<QualityLabel>,
    lowercase: bool,
    max_features: usize,
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<f64>,
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    l2_lambda: f64,
    trained_epochs: usize,
}
