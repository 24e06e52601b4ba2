//! Structured log of every provider call made during a run.
//!
//! One JSON object per line, tagged by `event`. Replaying the `call` events
//! through [`ScriptedMock::from_trace`](super::ScriptedMock::from_trace)
//! reproduces the run.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{estimate_messages, CallRole, Exchange, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    TurnStart {
        topic_id: String,
        turn_id: u32,
        utterance: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resolved_utterance: Option<String>,
    },
    Call {
        key: String,
        topic_id: String,
        turn_id: u32,
        shot: usize,
        role: CallRole,
        request: GenerationRequest,
        response: String,
    },
    Degraded {
        topic_id: String,
        turn_id: u32,
        shot: usize,
        reason: String,
    },
}

impl From<&Exchange> for TraceEvent {
    fn from(ex: &Exchange) -> Self {
        TraceEvent::Call {
            key: ex.key.to_string(),
            topic_id: ex.key.topic_id.clone(),
            turn_id: ex.key.turn_id,
            shot: ex.key.shot,
            role: ex.key.role.clone(),
            request: ex.request.clone(),
            response: ex.response.clone(),
        }
    }
}

pub fn write_trace(events: &[TraceEvent], mut out: impl Write) -> std::io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(reader: impl BufRead) -> Result<Vec<TraceEvent>, String> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

/// A contract breach found in a trace.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceViolation {
    /// A summarization request contained the turn's utterance.
    #[error("{key}: summarization request contains the utterance")]
    UtteranceLeak { key: String },
    /// A request's estimated size exceeded the budget.
    #[error("{key}: estimated {estimate} tokens, budget {budget}")]
    OverBudget { key: String, estimate: usize, budget: usize },
}

/// Checks the summarizer-blindness and context-budget contracts over a
/// whole trace. Utterances are taken from the `turn_start` events.
pub fn check_trace(events: &[TraceEvent], budget: usize) -> Vec<TraceViolation> {
    let mut violations = Vec::new();
    let mut utterances: std::collections::HashMap<(&str, u32), Vec<&str>> = Default::default();
    for e in events {
        if let TraceEvent::TurnStart { topic_id, turn_id, utterance, resolved_utterance } = e {
            let entry = utterances.entry((topic_id.as_str(), *turn_id)).or_default();
            entry.push(utterance.trim());
            if let Some(r) = resolved_utterance {
                entry.push(r.trim());
            }
        }
    }
    for e in events {
        let TraceEvent::Call { key, topic_id, turn_id, role, request, .. } = e else { continue };
        let estimate = estimate_messages(&request.messages);
        if estimate > budget {
            violations.push(TraceViolation::OverBudget { key: key.clone(), estimate, budget });
        }
        if matches!(role, CallRole::Summary { .. }) {
            let text = request.full_text();
            let leaked = utterances
                .get(&(topic_id.as_str(), *turn_id))
                .is_some_and(|us| us.iter().any(|u| !u.is_empty() && text.contains(u)));
            if leaked {
                violations.push(TraceViolation::UtteranceLeak { key: key.clone() });
            }
        }
    }
    violations
}
