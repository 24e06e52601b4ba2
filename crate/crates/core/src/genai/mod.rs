//! Chat-model provider contracts for the two generative roles: the answerer
//! (drafts and re-drafts answers from the conversation) and the summarizer
//! (condenses one passage without seeing the user's question).

mod budget;
mod http;
mod mock;
mod prompt;
pub mod trace;

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use budget::{enforce_budget, estimate_messages, estimate_tokens};
pub use http::HttpChatProvider;
pub use mock::{MockScript, ScriptedMock};
pub use prompt::{build_grounded_prompt, build_initial_prompt, build_summary_prompt, normalize_contractions};

/// Longest passage (in characters) the summarizer accepts.
pub const SUMMARY_INPUT_CAP: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum GenAiError {
    #[error("prompt too large: estimated {estimate} tokens, budget {budget}")]
    PromptTooLarge { estimate: usize, budget: usize },
    #[error("request must end with a user message")]
    EmptyPrompt,
    #[error("empty generation for {key}")]
    EmptyGeneration { key: String },
    #[error("{key}: transport error: {message}")]
    Transport { key: String, message: String },
    #[error("{key}: provider answered HTTP {status}")]
    Status { key: String, status: u16 },
    #[error("mock script has no entry for {key}")]
    MissingScript { key: String },
    #[error("passage has {chars} characters, summarizer accepts at most {cap}")]
    PassageTooLong { chars: usize, cap: usize },
    #[error("invalid provider config: {0}")]
    Config(String),
    #[error("mock script {path}: {message}")]
    Script { path: PathBuf, message: String },
}

impl GenAiError {
    /// Failures of the remote or scripted provider itself, as opposed to
    /// problems with the request we built.
    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            GenAiError::EmptyGeneration { .. }
                | GenAiError::Transport { .. }
                | GenAiError::Status { .. }
                | GenAiError::MissingScript { .. }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage { role, content: content.into() }
    }

    pub fn system(content: impl Into<String>) -> Self {
        Self::new(Role::System, content)
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self::new(Role::User, content)
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self::new(Role::Assistant, content)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub messages: Vec<ChatMessage>,
    pub temperature: f64,
    pub max_tokens: usize,
}

impl GenerationRequest {
    /// All message contents, for substring checks over what was sent.
    pub fn full_text(&self) -> String {
        self.messages.iter().map(|m| m.content.as_str()).collect::<Vec<_>>().join("\n")
    }
}

/// Which generative role a call plays. Summaries carry the passage id so a
/// script can address them individually.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallRole {
    Answer,
    Summary { passage_id: String },
}

impl fmt::Display for CallRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CallRole::Answer => f.write_str("answer"),
            CallRole::Summary { passage_id } => write!(f, "summary:{passage_id}"),
        }
    }
}

/// Addresses one provider call: `topic/turn/shot/role`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CallKey {
    pub topic_id: String,
    pub turn_id: u32,
    pub shot: usize,
    pub role: CallRole,
}

impl CallKey {
    pub fn answer(topic_id: &str, turn_id: u32, shot: usize) -> Self {
        CallKey { topic_id: topic_id.to_string(), turn_id, shot, role: CallRole::Answer }
    }

    pub fn summary(topic_id: &str, turn_id: u32, shot: usize, passage_id: &str) -> Self {
        CallKey {
            topic_id: topic_id.to_string(),
            turn_id,
            shot,
            role: CallRole::Summary { passage_id: passage_id.to_string() },
        }
    }
}

impl fmt::Display for CallKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.topic_id, self.turn_id, self.shot, self.role)
    }
}

pub trait ChatProvider: Send + Sync {
    /// Raw completion for an already budget-checked request.
    fn complete(&self, key: &CallKey, request: &GenerationRequest) -> Result<String, GenAiError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    HttpChat,
    ScriptedMock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint_url: Option<String>,
    /// Mock script file, for `scripted_mock`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub script_path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
    pub context_budget_tokens: usize,
    /// Sampling temperature for answer generation.
    pub temperature: f64,
    /// Temperature used for summarization.
    pub low_temperature: f64,
    pub max_tokens: usize,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            kind: ProviderKind::ScriptedMock,
            endpoint_url: None,
            script_path: None,
            system_prompt: None,
            context_budget_tokens: 2048,
            temperature: 0.7,
            low_temperature: 0.1,
            max_tokens: 512,
            timeout_ms: 120_000,
            max_in_flight: 2,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), GenAiError> {
        if self.kind == ProviderKind::HttpChat && self.endpoint_url.is_none() {
            return Err(GenAiError::Config("http_chat provider requires endpoint_url".into()));
        }
        if self.max_tokens == 0 {
            return Err(GenAiError::Config("max_tokens must be >= 1".into()));
        }
        if !(self.temperature >= 0.0 && self.low_temperature >= 0.0) {
            return Err(GenAiError::Config("temperatures must be >= 0".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }
}

pub fn build_chat_provider(cfg: &ProviderConfig) -> Result<Arc<dyn ChatProvider>, GenAiError> {
    cfg.validate()?;
    Ok(match cfg.kind {
        ProviderKind::HttpChat => Arc::new(HttpChatProvider::new(cfg)?),
        ProviderKind::ScriptedMock => {
            let path = cfg
                .script_path
                .as_ref()
                .ok_or_else(|| GenAiError::Config("scripted_mock provider requires script_path".into()))?;
            Arc::new(ScriptedMock::load(path)?)
        }
    })
}

/// One completed provider call.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub key: CallKey,
    pub request: GenerationRequest,
    pub response: String,
}

fn checked_complete(provider: &dyn ChatProvider, key: CallKey, request: GenerationRequest) -> Result<Exchange, GenAiError> {
    let response = provider.complete(&key, &request)?;
    let response = response.trim().to_string();
    if response.is_empty() {
        return Err(GenAiError::EmptyGeneration { key: key.to_string() });
    }
    Ok(Exchange { key, request, response })
}

/// Answers `prompt` in the context of `history`, trimming history to the
/// context budget first.
pub fn generate_answer(
    provider: &dyn ChatProvider,
    cfg: &ProviderConfig,
    key: CallKey,
    history: &[ChatMessage],
    prompt: &str,
) -> Result<Exchange, GenAiError> {
    let mut messages = Vec::with_capacity(history.len() + 2);
    if let Some(system) = &cfg.system_prompt {
        messages.push(ChatMessage::system(system.clone()));
    }
    messages.extend(history.iter().cloned());
    messages.push(ChatMessage::user(prompt));
    let messages = enforce_budget(messages, cfg.context_budget_tokens)?;
    let request = GenerationRequest { messages, temperature: cfg.temperature, max_tokens: cfg.max_tokens };
    checked_complete(provider, key, request)
}

/// Summarizes one passage. The request holds only the instruction and the
/// passage text; nothing about the conversation reaches the summarizer.
pub fn summarize_passage(
    provider: &dyn ChatProvider,
    cfg: &ProviderConfig,
    key: CallKey,
    passage_text: &str,
) -> Result<Exchange, GenAiError> {
    let chars = passage_text.chars().count();
    if chars > SUMMARY_INPUT_CAP {
        return Err(GenAiError::PassageTooLong { chars, cap: SUMMARY_INPUT_CAP });
    }
    let messages = enforce_budget(vec![ChatMessage::user(build_summary_prompt(passage_text))], cfg.context_budget_tokens)?;
    let request = GenerationRequest { messages, temperature: cfg.low_temperature, max_tokens: cfg.max_tokens };
    checked_complete(provider, key, request)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock(entries: &[(&str, &str)]) -> ScriptedMock {
        ScriptedMock::new(entries.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }

    #[test]
    fn key_format() {
        assert_eq!(CallKey::answer("t1", 2, 1).to_string(), "t1/2/1/answer");
        assert_eq!(CallKey::summary("t1", 2, 1, "p9").to_string(), "t1/2/1/summary:p9");
    }

    #[test]
    fn answer_is_scripted_and_repeatable() {
        let m = mock(&[("fig2/1/1/answer", "The best diets for a lactose-intolerant vegetarian...")]);
        let cfg = ProviderConfig::default();
        let a = generate_answer(&m, &cfg, CallKey::answer("fig2", 1, 1), &[], "What is a good diet?").unwrap();
        let b = generate_answer(&m, &cfg, CallKey::answer("fig2", 1, 1), &[], "What is a good diet?").unwrap();
        assert!(a.response.starts_with("The best diets for a lactose-intolerant vegetarian"));
        assert_eq!(a, b);
        assert_eq!(a.request.temperature, 0.7);
    }

    #[test]
    fn empty_response_is_an_error() {
        let m = mock(&[("t/1/1/answer", "   ")]);
        let err = generate_answer(&m, &ProviderConfig::default(), CallKey::answer("t", 1, 1), &[], "q").unwrap_err();
        assert_eq!(err.to_string(), "empty generation for t/1/1/answer");
        assert!(err.is_provider_failure());
    }

    #[test]
    fn missing_key_is_named() {
        let m = mock(&[]);
        let err = generate_answer(&m, &ProviderConfig::default(), CallKey::answer("t", 3, 2), &[], "q").unwrap_err();
        assert_eq!(err.to_string(), "mock script has no entry for t/3/2/answer");
    }

    #[test]
    fn summary_request_is_blind_and_cold() {
        let m = mock(&[("*/*/*/summary:mac", "The original Macintosh plans called for a system around $1,000")]);
        let cfg = ProviderConfig::default();
        let passage = "The original Macintosh plans called for a system around $1,000. It shipped later.";
        let ex = summarize_passage(&m, &cfg, CallKey::summary("t", 1, 1, "mac"), passage).unwrap();
        assert_eq!(ex.response, "The original Macintosh plans called for a system around $1,000");
        assert_eq!(ex.request.temperature, cfg.low_temperature);
        assert_eq!(ex.request.messages.len(), 1);
        assert_eq!(ex.request.messages[0].content, build_summary_prompt(passage));
    }

    #[test]
    fn overlong_passage_rejected() {
        let m = mock(&[("*/*/*/summary:p", "x")]);
        let text = "a".repeat(513);
        let err = summarize_passage(&m, &ProviderConfig::default(), CallKey::summary("t", 1, 1, "p"), &text).unwrap_err();
        assert!(matches!(err, GenAiError::PassageTooLong { chars: 513, cap: 512 }));
        let ok = "a".repeat(512);
        assert!(summarize_passage(&m, &ProviderConfig::default(), CallKey::summary("t", 1, 1, "p"), &ok).is_ok());
    }

    #[test]
    fn system_prompt_is_prepended() {
        let m = mock(&[("t/1/1/answer", "ok")]);
        let cfg = ProviderConfig { system_prompt: Some("Be thorough.".into()), ..Default::default() };
        let ex = generate_answer(&m, &cfg, CallKey::answer("t", 1, 1), &[ChatMessage::user("a"), ChatMessage::assistant("b")], "q").unwrap();
        let roles: Vec<Role> = ex.request.messages.iter().map(|m| m.role).collect();
        assert_eq!(roles, [Role::System, Role::User, Role::Assistant, Role::User]);
    }

    #[test]
    fn config_validation() {
        let cfg = ProviderConfig { kind: ProviderKind::HttpChat, ..Default::default() };
        assert!(matches!(build_chat_provider(&cfg), Err(GenAiError::Config(_))));
        assert!(matches!(build_chat_provider(&ProviderConfig::default()), Err(GenAiError::Config(_))));
    }
}
