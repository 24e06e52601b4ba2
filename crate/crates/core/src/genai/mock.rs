//! Scripted provider for deterministic runs.
//!
//! A script is a JSON object mapping `topic/turn/shot/role` keys to response
//! text. Lookup tries the exact key, then `topic/*/*/role`, then `*/*/*/role`,
//! so a passage summary can be scripted once for every turn that retrieves it.

use std::collections::BTreeMap;
use std::path::Path;

use super::trace::TraceEvent;
use super::{CallKey, ChatProvider, GenAiError, GenerationRequest};

pub type MockScript = BTreeMap<String, String>;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScriptedMock {
    script: MockScript,
}

impl ScriptedMock {
    pub fn new(script: MockScript) -> Self {
        ScriptedMock { script }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GenAiError> {
        let path = path.as_ref();
        let err = |message: String| GenAiError::Script { path: path.to_path_buf(), message };
        let raw = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let script: MockScript = serde_json::from_str(&raw).map_err(|e| err(e.to_string()))?;
        Ok(ScriptedMock { script })
    }

    /// Rebuilds a script from recorded calls, keyed exactly.
    pub fn from_trace<'a>(events: impl IntoIterator<Item = &'a TraceEvent>) -> Self {
        let script = events
            .into_iter()
            .filter_map(|e| match e {
                TraceEvent::Call { key, response, .. } => Some((key.clone(), response.clone())),
                _ => None,
            })
            .collect();
        ScriptedMock { script }
    }

    pub fn script(&self) -> &MockScript {
        &self.script
    }

    pub fn lookup(&self, key: &CallKey) -> Option<&str> {
        let candidates = [key.to_string(), format!("{}/*/*/{}", key.topic_id, key.role), format!("*/*/*/{}", key.role)];
        candidates.iter().find_map(|k| self.script.get(k)).map(String::as_str)
    }
}

impl ChatProvider for ScriptedMock {
    fn complete(&self, key: &CallKey, _request: &GenerationRequest) -> Result<String, GenAiError> {
        self.lookup(key)
            .map(str::to_string)
            .ok_or_else(|| GenAiError::MissingScript { key: key.to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_key_wins_over_wildcards() {
        let m = ScriptedMock::new(
            [
                ("t/1/1/summary:p".to_string(), "exact".to_string()),
                ("t/*/*/summary:p".to_string(), "topic".to_string()),
                ("*/*/*/summary:p".to_string(), "any".to_string()),
            ]
            .into(),
        );
        assert_eq!(m.lookup(&CallKey::summary("t", 1, 1, "p")), Some("exact"));
        assert_eq!(m.lookup(&CallKey::summary("t", 2, 1, "p")), Some("topic"));
        assert_eq!(m.lookup(&CallKey::summary("u", 2, 1, "p")), Some("any"));
        assert_eq!(m.lookup(&CallKey::summary("u", 2, 1, "q")), None);
    }
}
