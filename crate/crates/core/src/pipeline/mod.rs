//! Per-turn orchestration.
//!
//! For each turn: select PTKBs, build the initial prompt, generate a first
//! answer against the canonical history, then for each shot search the index
//! with the latest answer, drop non-reliable passages, optimize and summarize
//! the top passages, and (before the last shot) ask for a new answer grounded
//! in the combined summaries. The last combined summary, cut at a sentence
//! boundary, is the response.
//!
//! Call keys number shots from 1. The first answer is `…/1/answer`; the
//! answer regenerated after shot `s` is `…/{s+1}/answer` because it becomes
//! the query for shot `s + 1`.

mod output;
mod steps;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Passage, Topic, Turn};
use crate::embedding::{EmbedError, Embedder};
use crate::eval::EvalError;
use crate::genai::trace::TraceEvent;
use crate::genai::{
    build_grounded_prompt, build_initial_prompt, generate_answer, summarize_passage, CallKey, ChatProvider, Exchange,
    GenAiError, ProviderConfig, SUMMARY_INPUT_CAP,
};
use crate::index::{IndexBundle, SearchHit};
use crate::quality::QualityFilter;

pub use output::{write_run_dir, ProvenanceEntry, TurnRecord, TRACE_FILE};
pub use steps::{assemble_fresh_history, fluent_cutoff, optimize_passage, select_ptkbs};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid run config: {0}")]
    Config(String),
    #[error("topic {topic_id} turn {turn_id}: missing canonical response")]
    MissingCanonicalResponse { topic_id: String, turn_id: u32 },
    #[error("embedding: {0}")]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    GenAi(#[from] GenAiError),
    #[error("search hit {0} is not in the corpus")]
    MissingPassage(String),
    #[error("no passages retrieved and no generated answer to fall back on")]
    NothingToAnswerWith,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PipelineError {
    /// Failures of a model or embedding endpoint, as opposed to bad input.
    pub fn is_provider_failure(&self) -> bool {
        match self {
            PipelineError::GenAi(e) => e.is_provider_failure(),
            PipelineError::Embed(e) => matches!(e, EmbedError::Transport(_) | EmbedError::Status(_)),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Generate, then retrieve with the generated answer.
    Grg,
    /// Retrieve with the resolved utterance; no first generation.
    RetrieveThenGenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Run1,
    Run2,
    Run3,
    Rtg,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Run1, Preset::Run2, Preset::Run3, Preset::Rtg];

    pub fn as_str(self) -> &'static str {
        match self {
            Preset::Run1 => "run1",
            Preset::Run2 => "run2",
            Preset::Run3 => "run3",
            Preset::Rtg => "rtg",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| PipelineError::Config(format!("unknown preset {s:?} (expected run1, run2, run3 or rtg)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run_tag: String,
    pub mode: Mode,
    pub shots: usize,
    pub use_quality_filter: bool,
    pub ptkb_threshold: f64,
    pub top_k_retrieve: usize,
    pub top_n_passages: usize,
    pub optimize_char_cap: usize,
    pub final_char_cap: usize,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (mode, shots, use_quality_filter) = match preset {
            Preset::Run1 => (Mode::Grg, 2, true),
            Preset::Run2 => (Mode::Grg, 1, true),
            Preset::Run3 => (Mode::Grg, 1, false),
            Preset::Rtg => (Mode::RetrieveThenGenerate, 1, false),
        };
        RunConfig {
            run_tag: preset.as_str().to_string(),
            mode,
            shots,
            use_quality_filter,
            ptkb_threshold: 0.3,
            top_k_retrieve: 50,
            top_n_passages: 5,
            optimize_char_cap: SUMMARY_INPUT_CAP,
            final_char_cap: 1200,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.shots == 0 {
            return fail("shots must be >= 1");
        }
        if self.top_n_passages == 0 || self.top_n_passages > self.top_k_retrieve {
            return fail("top_n_passages must be in 1..=top_k_retrieve");
        }
        if self.optimize_char_cap == 0 || self.final_char_cap == 0 {
            return fail("character caps must be >= 1");
        }
        if self.optimize_char_cap > SUMMARY_INPUT_CAP {
            return fail("optimize_char_cap exceeds the summarizer input cap of 512");
        }
        if !(-1.0..=1.0).contains(&self.ptkb_threshold) {
            return fail("ptkb_threshold must be in [-1, 1]");
        }
        if self.run_tag.is_empty() || self.run_tag.contains(char::is_whitespace) {
            return fail("run_tag must be a non-empty token without whitespace");
        }
        Ok(())
    }
}

/// The answerer, the summarizer and the embedder, each with its settings.
#[derive(Clone)]
pub struct Providers {
    pub answerer: Arc<dyn ChatProvider>,
    pub answer_cfg: ProviderConfig,
    pub summarizer: Arc<dyn ChatProvider>,
    pub summary_cfg: ProviderConfig,
    pub embedder: Arc<dyn Embedder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarizedPassage {
    pub passage_id: String,
    pub optimized_text: String,
    pub summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_index: usize,
    pub search_query: String,
    /// The answer used as this shot's query; `None` when the query came from
    /// the utterance or was carried over from the previous shot.
    pub generated_answer: Option<String>,
    pub retrieved: Vec<SearchHit>,
    pub kept_after_filter: Vec<String>,
    /// The top kept passages, in rank order.
    pub passages: Vec<SummarizedPassage>,
    pub combined_summary: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub topic_id: String,
    pub turn_id: u32,
    pub selected_ptkbs: Vec<(String, f64)>,
    pub initial_prompt: String,
    pub shots: Vec<ShotRecord>,
    pub final_response: String,
    /// The last shot's kept hits, re-ranked from 1.
    pub provenance: Vec<SearchHit>,
    /// Set when the last shot retrieved nothing and the response fell back to
    /// the last generated answer.
    pub degraded: bool,
}

/// A turn's result with the provider calls that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRun {
    pub result: TurnResult,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, thiserror::Error)]
#[error("topic {topic_id} turn {turn_id}: {error}")]
pub struct TurnError {
    pub topic_id: String,
    pub turn_id: u32,
    pub error: PipelineError,
    /// Later turns of the same topic that were not attempted.
    pub skipped_turns: Vec<u32>,
}

/// Results in topic file order, turns in order within a topic.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub turns: Vec<TurnRun>,
    pub errors: Vec<TurnError>,
}

impl RunOutput {
    pub fn results(&self) -> Vec<TurnResult> {
        self.turns.iter().map(|t| t.result.clone()).collect()
    }

    pub fn trace(&self) -> Vec<TraceEvent> {
        self.turns.iter().flat_map(|t| t.trace.iter().cloned()).collect()
    }
}

/// Everything a run reads. All of it is shared read-only across topics.
pub struct Pipeline<'a> {
    config: &'a RunConfig,
    providers: &'a Providers,
    bundle: &'a IndexBundle,
    filter: Option<&'a QualityFilter>,
}

impl<'a> Pipeline<'a> {
    /// A filter is required when the config enables filtering and ignored
    /// otherwise.
    pub fn new(
        config: &'a RunConfig,
        providers: &'a Providers,
        bundle: &'a IndexBundle,
        filter: Option<&'a QualityFilter>,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        if config.use_quality_filter && filter.is_none() {
            return Err(PipelineError::Config("preset requires quality filter".into()));
        }
        let filter = if config.use_quality_filter { filter } else { None };
        Ok(Pipeline { config, providers, bundle, filter })
    }

    pub fn config(&self) -> &RunConfig {
        self.config
    }

    pub fn run_turn(&self, topic: &Topic, turn: &Turn) -> Result<TurnRun, PipelineError> {
        TurnState::new(self, topic, turn).run()
    }

    /// Runs each topic's turns in order, stopping a topic at its first
    /// failure. Topics run concurrently on `parallelism` threads; the output
    /// does not depend on the thread count.
    pub fn run_topics(&self, topics: &[Topic], parallelism: usize) -> Result<RunOutput, PipelineError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism.max(1))
            .build()
            .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))?;
        let per_topic: Vec<(Vec<TurnRun>, Option<TurnError>)> =
            pool.install(|| topics.par_iter().map(|t| self.run_topic(t)).collect());
        let mut out = RunOutput::default();
        for (runs, err) in per_topic {
            out.turns.extend(runs);
            out.errors.extend(err);
        }
        Ok(out)
    }

    fn run_topic(&self, topic: &Topic) -> (Vec<TurnRun>, Option<TurnError>) {
        let mut runs = Vec::with_capacity(topic.turns.len());
        for (i, turn) in topic.turns.iter().enumerate() {
            match self.run_turn(topic, turn) {
                Ok(run) => runs.push(run),
                Err(error) => {
                    let skipped_turns = topic.turns[i + 1..].iter().map(|t| t.turn_id).collect();
                    let err = TurnError { topic_id: topic.topic_id.clone(), turn_id: turn.turn_id, error, skipped_turns };
                    return (runs, Some(err));
                }
            }
        }
        (runs, None)
    }
}

struct TurnState<'p, 'a> {
    pipeline: &'p Pipeline<'a>,
    topic: &'p Topic,
    turn: &'p Turn,
    trace: Vec<TraceEvent>,
}

impl<'p, 'a> TurnState<'p, 'a> {
    fn new(pipeline: &'p Pipeline<'a>, topic: &'p Topic, turn: &'p Turn) -> Self {
        let start = TraceEvent::TurnStart {
            topic_id: topic.topic_id.clone(),
            turn_id: turn.turn_id,
            utterance: turn.utterance.clone(),
            resolved_utterance: turn.resolved_utterance.clone(),
        };
        TurnState { pipeline, topic, turn, trace: vec![start] }
    }

    fn record(&mut self, ex: Exchange) -> String {
        self.trace.push(TraceEvent::from(&ex));
        ex.response
    }

    fn degraded(&mut self, shot: usize, reason: &str) {
        self.trace.push(TraceEvent::Degraded {
            topic_id: self.topic.topic_id.clone(),
            turn_id: self.turn.turn_id,
            shot,
            reason: reason.to_string(),
        });
    }

    fn run(mut self) -> Result<TurnRun, PipelineError> {
        let cfg = self.pipeline.config;
        let providers = self.pipeline.providers;
        let (topic_id, turn_id) = (self.topic.topic_id.as_str(), self.turn.turn_id);

        let history = assemble_fresh_history(self.topic, turn_id)?;
        let selected = select_ptkbs(providers.embedder.as_ref(), self.topic, &self.turn.utterance, cfg.ptkb_threshold)?;
        let statements: Vec<&str> = selected
            .iter()
            .filter_map(|(id, _)| self.topic.ptkbs.iter().find(|p| &p.ptkb_id == id))
            .map(|p| p.statement.as_str())
            .collect();
        let initial_prompt = build_initial_prompt(&statements, &self.turn.utterance);

        let (mut query, mut answer) = match cfg.mode {
            Mode::Grg => {
                let ex = generate_answer(
                    providers.answerer.as_ref(),
                    &providers.answer_cfg,
                    CallKey::answer(topic_id, turn_id, 1),
                    &history,
                    &initial_prompt,
                )?;
                let text = self.record(ex);
                (text.clone(), Some(text))
            }
            Mode::RetrieveThenGenerate => (self.turn.resolved_utterance.clone().unwrap_or_else(|| initial_prompt.clone()), None),
        };
        let mut last_answer = answer.clone();
        let mut shots = Vec::with_capacity(cfg.shots);
        let mut last_kept: Vec<SearchHit> = Vec::new();

        for shot in 1..=cfg.shots {
            let (record, kept) = self.shot(shot, &query, answer.take())?;
            let combined = record.combined_summary.clone();
            shots.push(record);
            last_kept = kept;
            if shot == cfg.shots {
                break;
            }
            if combined.is_empty() {
                self.degraded(shot, "no passages retrieved; reusing the previous query");
                continue;
            }
            let ex = generate_answer(
                providers.answerer.as_ref(),
                &providers.answer_cfg,
                CallKey::answer(topic_id, turn_id, shot + 1),
                &history,
                &build_grounded_prompt(&combined, &initial_prompt),
            )?;
            let text = self.record(ex);
            query = text.clone();
            answer = Some(text.clone());
            last_answer = Some(text);
        }

        let last = shots.last().expect("shots >= 1");
        let (final_response, degraded) = if last.combined_summary.is_empty() {
            let fallback = last_answer.ok_or(PipelineError::NothingToAnswerWith)?;
            self.degraded(cfg.shots, "no passages retrieved on the final shot; responding with the last generated answer");
            (fluent_cutoff(&fallback, cfg.final_char_cap), true)
        } else {
            (fluent_cutoff(&last.combined_summary, cfg.final_char_cap), false)
        };
        let provenance = last_kept
            .into_iter()
            .enumerate()
            .map(|(i, h)| SearchHit { rank: i + 1, ..h })
            .collect();
        let result = TurnResult {
            topic_id: topic_id.to_string(),
            turn_id,
            selected_ptkbs: selected,
            initial_prompt,
            shots,
            final_response,
            provenance,
            degraded,
        };
        Ok(TurnRun { result, trace: self.trace })
    }

    /// Retrieve, filter, optimize and summarize. Returns the record and the
    /// kept hits.
    fn shot(
        &mut self,
        shot: usize,
        query: &str,
        generated_answer: Option<String>,
    ) -> Result<(ShotRecord, Vec<SearchHit>), PipelineError> {
        let p = self.pipeline;
        let retrieved = p.bundle.index.search(query, p.config.top_k_retrieve);
        let pairs = retrieved
            .iter()
            .map(|h| {
                let passage = p.bundle.corpus.get(&h.passage_id).ok_or_else(|| PipelineError::MissingPassage(h.passage_id.clone()))?;
                Ok((passage, h.clone()))
            })
            .collect::<Result<Vec<(&Passage, SearchHit)>, PipelineError>>()?;
        let kept = match p.filter {
            Some(f) => f.filter_reliable(pairs),
            None => pairs,
        };
        let mut passages = Vec::new();
        for (passage, _) in kept.iter().take(p.config.top_n_passages) {
            let optimized_text =
                optimize_passage(p.providers.embedder.as_ref(), passage, &self.turn.utterance, p.config.optimize_char_cap)?;
            let ex = summarize_passage(
                p.providers.summarizer.as_ref(),
                &p.providers.summary_cfg,
                CallKey::summary(&self.topic.topic_id, self.turn.turn_id, shot, &passage.id),
                &optimized_text,
            )?;
            let summary = self.record(ex);
            passages.push(SummarizedPassage { passage_id: passage.id.clone(), optimized_text, summary });
        }
        let combined_summary = passages.iter().map(|s| s.summary.as_str()).collect::<Vec<_>>().join("\n\n");
        let kept_hits: Vec<SearchHit> = kept.into_iter().map(|(_, h)| h).collect();
        let record = ShotRecord {
            shot_index: shot,
            search_query: query.to_string(),
            generated_answer,
            retrieved,
            kept_after_filter: kept_hits.iter().map(|h| h.passage_id.clone()).collect(),
            passages,
            combined_summary,
        };
        Ok((record, kept_hits))
    }
}
