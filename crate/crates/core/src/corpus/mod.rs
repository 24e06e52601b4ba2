//! Passage, conversation and labeled-training stores.
//!
//! Corpora are JSON-Lines files with one `{"id", "text", "url"}` object per
//! line. Topics are a single JSON document (see [`topics`]). Loaded stores are
//! immutable and can be shared across threads.

pub mod labeled;
pub mod sentences;
pub mod topics;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use labeled::{load_labeled, load_wikitext, save_labeled, LabeledDocument};
pub use sentences::split_sentences;
pub use topics::{load_topics, parse_topics, PtkbStatement, Topic, Turn};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {id} (line {line})")]
    DuplicateId { id: String, line: usize },
    #[error("line {line}: passage {id} has empty text")]
    EmptyText { id: String, line: usize },
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.to_path_buf(), source }
    }
}

/// One retrievable corpus unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage {
    pub id: String,
    pub url: Option<String>,
    pub text: String,
    /// Sentence segmentation of `text`; every entry is a substring of it.
    pub sentences: Vec<String>,
}

impl Passage {
    pub fn new(id: impl Into<String>, text: impl Into<String>, url: Option<String>) -> Self {
        let text = text.into();
        let sentences = split_sentences(&text);
        Passage { id: id.into(), url, text, sentences }
    }
}

/// On-disk shape of a corpus line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PassageRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl From<&Passage> for PassageRecord {
    fn from(p: &Passage) -> Self {
        PassageRecord { id: p.id.clone(), text: p.text.clone(), url: p.url.clone() }
    }
}

/// Loads a JSON-Lines corpus, preserving file order. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Passage>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_corpus(BufReader::new(file)).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::io(path, source),
        other => other,
    })
}

/// Parses corpus lines from any reader.
pub fn read_corpus(reader: impl BufRead) -> Result<Vec<Passage>, CorpusError> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut passages = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::io(Path::new("<reader>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PassageRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        if record.text.trim().is_empty() {
            return Err(CorpusError::EmptyText { id: record.id, line: line_no });
        }
        if seen.insert(record.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateId { id: record.id, line: line_no });
        }
        passages.push(Passage::new(record.id, record.text, record.url));
    }
    Ok(passages)
}

/// Writes passages back out as JSON-Lines (`id`, `text`, then `url` when set).
pub fn save_corpus(passages: &[Passage], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for p in passages {
        let line = serde_json::to_string(&PassageRecord::from(p)).expect("passage record serializes");
        writeln!(out, "{line}").map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

/// Passages with id lookup.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_id: HashMap<String, usize>,
}

impl Corpus {
    /// Fails on duplicate ids.
    pub fn new(passages: Vec<Passage>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if by_id.insert(p.id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId { id: p.id.clone(), line: i + 1 });
            }
        }
        Ok(Corpus { passages, by_id })
    }

    pub fn get(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }
}
