//! Labeled training documents for the quality filter.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;
use crate::quality::QualityLabel;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabeledDocument {
    pub text: String,
    pub label: QualityLabel,
}

impl LabeledDocument {
    pub fn new(text: impl Into<String>, label: QualityLabel) -> Self {
        LabeledDocument { text: text.into(), label }
    }
}

/// Loads `{"text", "label"}` JSON-Lines.
pub fn load_labeled(path: impl AsRef<Path>) -> Result<Vec<LabeledDocument>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: LabeledDocument = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: idx + 1, message: e.to_string() })?;
        out.push(doc);
    }
    Ok(out)
}

pub fn save_labeled(docs: &[LabeledDocument], path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for d in docs {
        writeln!(out, "{}", serde_json::to_string(d).expect("labeled doc serializes"))
            .map_err(|e| CorpusError::io(path, e))?;
    }
    out.flush().map_err(|e| CorpusError::io(path, e))
}

/// Top-level WikiText article heading: ` = Title = ` (exactly one `=` per side).
fn article_title(line: &str) -> Option<&str> {
    let t = line.trim();
    let inner = t.strip_prefix("= ")?.strip_suffix(" =")?;
    (!inner.starts_with('=') && !inner.ends_with('=')).then_some(inner)
}

fn is_subheading(line: &str) -> bool {
    let t = line.trim();
    t.starts_with("= =") && t.ends_with("= =")
}

/// Reads a WikiText-103 style dump and labels every article Reliable.
///
/// Articles start at a top-level ` = Title = ` line; section headings are
/// dropped and the remaining non-blank lines are joined with single spaces.
/// Articles with no body text are skipped.
pub fn load_wikitext(path: impl AsRef<Path>) -> Result<Vec<LabeledDocument>, CorpusError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    Ok(parse_wikitext(&raw))
}

pub fn parse_wikitext(raw: &str) -> Vec<LabeledDocument> {
    let mut docs = Vec::new();
    let mut body: Vec<&str> = Vec::new();
    let mut in_article = false;
    let mut flush = |body: &mut Vec<&str>| {
        if !body.is_empty() {
            docs.push(LabeledDocument::new(body.join(" "), QualityLabel::Reliable));
            body.clear();
        }
    };
    for line in raw.lines() {
        if article_title(line).is_some() {
            flush(&mut body);
            in_article = true;
        } else if in_article && !is_subheading(line) && !line.trim().is_empty() {
            body.push(line.trim());
        }
    }
    flush(&mut body);
    docs
}
