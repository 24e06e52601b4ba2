//! Prompt-size estimation and the context-budget guard.
//!
//! Models in this role degrade into gibberish once the prompt passes their
//! context window, so every request is trimmed to fit before it is sent.

use super::{ChatMessage, GenAiError, Role};
use crate::text::whitespace_token_count;

/// `ceil(1.3 * whitespace tokens)`, computed in integers.
pub fn estimate_tokens(text: &str) -> usize {
    (whitespace_token_count(text) * 13).div_ceil(10)
}

pub fn estimate_messages(messages: &[ChatMessage]) -> usize {
    messages.iter().map(|m| estimate_tokens(&m.content)).sum()
}

/// Drops the oldest non-system messages, whole and one at a time, until the
/// estimate fits `budget`. System messages and the final user message are
/// always kept; if those alone exceed the budget the prompt is rejected.
pub fn enforce_budget(messages: Vec<ChatMessage>, budget: usize) -> Result<Vec<ChatMessage>, GenAiError> {
    let Some(last) = messages.last() else {
        return Err(GenAiError::EmptyPrompt);
    };
    if last.role != Role::User {
        return Err(GenAiError::EmptyPrompt);
    }
    let final_tokens = estimate_tokens(&last.content);
    if final_tokens > budget {
        return Err(GenAiError::PromptTooLarge { estimate: final_tokens, budget });
    }
    let total = estimate_messages(&messages);
    if total <= budget {
        return Ok(messages);
    }
    let n = messages.len();
    let mut system = Vec::new();
    let mut history = std::collections::VecDeque::new();
    let mut final_msg = None;
    for (i, m) in messages.into_iter().enumerate() {
        if i == n - 1 {
            final_msg = Some(m);
        } else if m.role == Role::System {
            system.push(m);
        } else {
            history.push_back(m);
        }
    }
    let final_msg = final_msg.expect("non-empty");
    let mut total = total;
    while total > budget {
        match history.pop_front() {
            Some(dropped) => total -= estimate_tokens(&dropped.content),
            None => break,
        }
    }
    if total > budget {
        return Err(GenAiError::PromptTooLarge { estimate: total, budget });
    }
    let mut out = system;
    out.extend(history);
    out.push(final_msg);
    Ok(out)
}
