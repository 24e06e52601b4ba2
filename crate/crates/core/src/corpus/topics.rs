//! Conversation topics: persistent PTKB statements plus ordered turns.
//!
//! File shape:
//!
//! ```json
//! {"topics": [{"topic_id": "t1",
//!              "ptkbs": [{"ptkb_id": "1", "statement": "I am vegetarian."}],
//!              "turns": [{"turn_id": 1, "utterance": "...",
//!                         "canonical_response": "...", "resolved_utterance": "..."}]}]}
//! ```

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CorpusError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PtkbStatement {
    pub ptkb_id: String,
    pub statement: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Turn {
    pub turn_id: u32,
    pub utterance: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub canonical_response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolved_utterance: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Topic {
    pub topic_id: String,
    #[serde(default)]
    pub ptkbs: Vec<PtkbStatement>,
    pub turns: Vec<Turn>,
}

impl Topic {
    pub fn turn(&self, turn_id: u32) -> Option<&Turn> {
        self.turns.iter().find(|t| t.turn_id == turn_id)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopicsFile {
    topics: Vec<Topic>,
}

fn json_pointer(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        out.push('/');
        match seg {
            Segment::Seq { index } => out.push_str(&index.to_string()),
            Segment::Map { key } => out.push_str(&key.replace('~', "~0").replace('/', "~1")),
            Segment::Enum { variant } => out.push_str(variant),
            Segment::Unknown => out.push('?'),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

fn schema(pointer: String, message: impl Into<String>) -> CorpusError {
    CorpusError::Schema { pointer, message: message.into() }
}

/// Parses and validates a topics document.
pub fn parse_topics(json: &str) -> Result<Vec<Topic>, CorpusError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: TopicsFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = json_pointer(e.path());
        schema(pointer, e.into_inner().to_string())
    })?;
    validate(&file.topics)?;
    Ok(file.topics)
}

pub fn load_topics(path: impl AsRef<Path>) -> Result<Vec<Topic>, CorpusError> {
    let path = path.as_ref();
    let raw = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    parse_topics(&raw)
}

fn validate(topics: &[Topic]) -> Result<(), CorpusError> {
    let mut topic_ids = HashSet::new();
    for (ti, topic) in topics.iter().enumerate() {
        let base = format!("/topics/{ti}");
        if topic.topic_id.trim().is_empty() {
            return Err(schema(format!("{base}/topic_id"), "empty topic id"));
        }
        if !topic_ids.insert(topic.topic_id.as_str()) {
            return Err(schema(format!("{base}/topic_id"), format!("duplicate topic id {}", topic.topic_id)));
        }
        let mut ptkb_ids = HashSet::new();
        for (pi, ptkb) in topic.ptkbs.iter().enumerate() {
            if !ptkb_ids.insert(ptkb.ptkb_id.as_str()) {
                return Err(schema(
                    format!("{base}/ptkbs/{pi}/ptkb_id"),
                    format!("duplicate ptkb id {}", ptkb.ptkb_id),
                ));
            }
            if ptkb.statement.trim().is_empty() {
                return Err(schema(format!("{base}/ptkbs/{pi}/statement"), "empty statement"));
            }
        }
        for (i, turn) in topic.turns.iter().enumerate() {
            if turn.turn_id as usize != i + 1 {
                return Err(schema(
                    format!("{base}/turns/{i}/turn_id"),
                    format!("non-consecutive turn ids: expected {}, found {}", i + 1, turn.turn_id),
                ));
            }
            if turn.utterance.trim().is_empty() {
                return Err(schema(format!("{base}/turns/{i}/utterance"), "empty utterance"));
            }
        }
    }
    Ok(())
}
