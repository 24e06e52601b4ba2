//! Single-file JSON persistence for an index and the passages it covers.
//!
//! ```json
//! {"format": "grg-bm25-index", "version": 1,
//!  "config": {"k1": 0.9, "b": 0.4, "lowercase": true, "stopwords": [...]},
//!  "doc_count": 12, "avg_doc_length": 41.5,
//!  "ids": ["p01", ...], "doc_lengths": [40, ...],
//!  "postings": {"term": [[ordinal, tf], ...], ...},
//!  "passages": [{"id": "p01", "text": "...", "url": "..."}, ...]}
//! ```
//!
//! Terms are written in lexicographic order, so rebuilding from the same
//! corpus yields identical bytes. Only the current version is readable.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{IndexConfig, IndexError, InvertedIndex, Posting};
use crate::corpus::{Corpus, Passage, PassageRecord};

pub const INDEX_FORMAT: &str = "grg-bm25-index";
pub const INDEX_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexFile {
    format: String,
    version: u32,
    config: IndexConfig,
    doc_count: usize,
    avg_doc_length: f64,
    ids: Vec<String>,
    doc_lengths: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    passages: Vec<PassageRecord>,
}

/// An index together with the passage store it was built from.
#[derive(Debug, Clone)]
pub struct IndexBundle {
    pub index: InvertedIndex,
    pub corpus: Corpus,
}

impl IndexBundle {
    pub fn build(passages: Vec<Passage>, cfg: IndexConfig) -> Result<Self, IndexError> {
        let index = InvertedIndex::build(&passages, cfg)?;
        let corpus = Corpus::new(passages)?;
        Ok(IndexBundle { index, corpus })
    }
}

fn io(path: &Path, source: std::io::Error) -> IndexError {
    IndexError::Io { path: path.to_path_buf(), source }
}

pub fn save_index(bundle: &IndexBundle, path: impl AsRef<Path>) -> Result<(), IndexError> {
    let path = path.as_ref();
    let idx = &bundle.index;
    let file = IndexFile {
        format: INDEX_FORMAT.to_string(),
        version: INDEX_VERSION,
        config: idx.config.clone(),
        doc_count: idx.doc_count(),
        avg_doc_length: idx.avg_doc_length,
        ids: idx.ids.clone(),
        doc_lengths: idx.doc_lengths.clone(),
        postings: idx
            .postings
            .iter()
            .map(|(t, list)| (t.clone(), list.iter().map(|p| (p.ordinal, p.tf)).collect()))
            .collect(),
        passages: bundle.corpus.passages().iter().map(PassageRecord::from).collect(),
    };
    let mut out = BufWriter::new(File::create(path).map_err(|e| io(path, e))?);
    serde_json::to_writer(&mut out, &file).map_err(|e| IndexError::Format(e.to_string()))?;
    out.write_all(b"\n").map_err(|e| io(path, e))?;
    out.flush().map_err(|e| io(path, e))
}

pub fn load_index(path: impl AsRef<Path>) -> Result<IndexBundle, IndexError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| io(path, e))?;
    let file: IndexFile = serde_json::from_str(&raw).map_err(|e| IndexError::Format(e.to_string()))?;
    if file.format != INDEX_FORMAT {
        return Err(IndexError::Format(format!("unexpected format tag {:?}", file.format)));
    }
    if file.version != INDEX_VERSION {
        return Err(IndexError::Format(format!("unsupported version {} (expected {INDEX_VERSION})", file.version)));
    }
    file.config.validate()?;
    if file.doc_count != file.ids.len() {
        return Err(IndexError::Format("doc_count does not match id table".into()));
    }
    let postings = file
        .postings
        .into_iter()
        .map(|(t, list)| (t, list.into_iter().map(|(ordinal, tf)| Posting { ordinal, tf }).collect()))
        .collect();
    let index = InvertedIndex::from_parts(file.config, postings, file.doc_lengths, file.ids)?;
    let passages: Vec<Passage> = file.passages.into_iter().map(|r| Passage::new(r.id, r.text, r.url)).collect();
    if passages.len() != index.doc_count() || passages.iter().zip(index.ids()).any(|(p, id)| &p.id != id) {
        return Err(IndexError::Format("passage table does not match index ids".into()));
    }
    Ok(IndexBundle { index, corpus: Corpus::new(passages)? })
}
