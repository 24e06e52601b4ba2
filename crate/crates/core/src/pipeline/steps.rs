//! The per-turn building blocks that do not involve a chat model.

use crate::corpus::{split_sentences, Passage, Topic};
use crate::embedding::{rank_by_similarity, EmbedError, Embedder};
use crate::genai::ChatMessage;

use super::PipelineError;

/// PTKB statements scoring at least `threshold` against the utterance, best
/// first.
pub fn select_ptkbs(
    embedder: &dyn Embedder,
    topic: &Topic,
    utterance: &str,
    threshold: f64,
) -> Result<Vec<(String, f64)>, EmbedError> {
    if topic.ptkbs.is_empty() {
        return Ok(Vec::new());
    }
    let statements: Vec<&str> = topic.ptkbs.iter().map(|p| p.statement.as_str()).collect();
    let ranked = rank_by_similarity(embedder, utterance, &statements)?;
    Ok(ranked
        .into_iter()
        .filter(|(_, score)| *score >= threshold)
        .map(|(i, score)| (topic.ptkbs[i].ptkb_id.clone(), score))
        .collect())
}

/// The canonical conversation before `current_turn`: one user/assistant
/// pair per earlier turn.
pub fn assemble_fresh_history(topic: &Topic, current_turn: u32) -> Result<Vec<ChatMessage>, PipelineError> {
    let mut history = Vec::new();
    for turn in topic.turns.iter().filter(|t| t.turn_id < current_turn) {
        let response = turn.canonical_response.as_deref().filter(|r| !r.trim().is_empty()).ok_or_else(|| {
            PipelineError::MissingCanonicalResponse { topic_id: topic.topic_id.clone(), turn_id: turn.turn_id }
        })?;
        history.push(ChatMessage::user(turn.utterance.clone()));
        history.push(ChatMessage::assistant(response));
    }
    Ok(history)
}

/// Reorders a passage's sentences by similarity to the utterance and keeps
/// the first `char_cap` characters, cutting mid-sentence if needed.
pub fn optimize_passage(
    embedder: &dyn Embedder,
    passage: &Passage,
    utterance: &str,
    char_cap: usize,
) -> Result<String, EmbedError> {
    let sentences: Vec<&str> = passage.sentences.iter().map(String::as_str).filter(|s| !s.trim().is_empty()).collect();
    let joined = if sentences.len() <= 1 {
        passage.text.trim().to_string()
    } else {
        let ranked = rank_by_similarity(embedder, utterance, &sentences)?;
        ranked.iter().map(|(i, _)| sentences[*i]).collect::<Vec<_>>().join(" ")
    };
    Ok(truncate_chars(&joined, char_cap).to_string())
}

pub(crate) fn truncate_chars(text: &str, cap: usize) -> &str {
    match text.char_indices().nth(cap) {
        Some((byte, _)) => &text[..byte],
        None => text,
    }
}

/// Shortens `text` to at most `cap` characters, preferring to end on a
/// sentence boundary. Falls back to a hard cut when even the first sentence
/// is too long.
pub fn fluent_cutoff(text: &str, cap: usize) -> String {
    if text.chars().count() <= cap {
        return text.to_string();
    }
    let mut best = None;
    let mut cursor = 0;
    for sentence in split_sentences(text) {
        let Some(found) = text[cursor..].find(sentence.as_str()) else { break };
        let end = cursor + found + sentence.len();
        if text[..end].chars().count() > cap {
            break;
        }
        best = Some(end);
        cursor = end;
    }
    match best {
        Some(end) if end < text.len() => text[..end].trim_end().to_string(),
        _ => truncate_chars(text, cap).to_string(),
    }
}
