mod common;

use std::sync::Arc;

use common::*;
use grg_core::corpus::{Corpus, Topic, Turn};
use grg_core::embedding::HashedLexicalEmbedder;
use grg_core::genai::trace::{check_trace, TraceEvent};
use grg_core::genai::{CallKey, ChatProvider, GenAiError, GenerationRequest, ProviderConfig, ScriptedMock};
use grg_core::index::{IndexBundle, IndexConfig};
use grg_core::pipeline::{Pipeline, Preset, Providers, RunConfig};

fn script_text(key: &str) -> String {
    let raw = std::fs::read_to_string(fixture("mock_script.json")).unwrap();
    let map: std::collections::BTreeMap<String, String> = serde_json::from_str(&raw).unwrap();
    map[key].clone()
}

#[test]
fn single_shot_answers_with_combined_summaries() {
    let out = run_preset(Preset::Run3, "corpus.jsonl", 1);
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    assert_eq!(out.turns.len(), 4);
    let r = &out.turns[0].result;
    assert_eq!((r.topic_id.as_str(), r.turn_id), ("fig2", 1));
    assert_eq!(r.shots.len(), 1);
    let shot = &r.shots[0];
    assert_eq!(shot.search_query, script_text("fig2/1/1/answer"));
    assert_eq!(shot.passages.len(), 5);
    assert_eq!(shot.passages[0].passage_id, "veg-grains");
    assert!(r.final_response.starts_with("There are many different grains, beans and legumes"));
    let expected: Vec<String> =
        shot.passages.iter().map(|p| script_text(&format!("*/*/*/summary:{}", p.passage_id))).collect();
    assert_eq!(r.final_response, expected.join("\n\n"));
    assert!(!r.degraded);
}

#[test]
fn ptkb_selection_drops_the_unrelated_statement() {
    let out = run_preset(Preset::Run3, "corpus.jsonl", 1);
    let ids: Vec<&str> = out.turns[0].result.selected_ptkbs.iter().map(|(id, _)| id.as_str()).collect();
    assert_eq!(ids, ["4", "3", "1"]);
    assert_eq!(
        out.turns[0].result.initial_prompt,
        "I would like to lose weight with a good diet, and am lactose intolerant, so dairy is a poor fit for my diet \
         and on a vegetarian diet. What is a good diet?"
    );
}

#[test]
fn two_shots_requery_with_the_grounded_answer() {
    let out = run_preset(Preset::Run1, "corpus.jsonl", 1);
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    for t in &out.turns {
        assert_eq!(t.result.shots.len(), 2);
    }
    let r = &out.turns[0].result;
    assert_eq!(r.shots[1].search_query, script_text("fig2/1/2/answer"));
    assert_eq!(r.shots[1].passages[0].passage_id, "med-plan");
    assert!(r.final_response.starts_with("The Mediterranean diet is a plant-based eating plan"));
    let grounded = out.turns[0]
        .trace
        .iter()
        .find_map(|e| match e {
            TraceEvent::Call { key, request, .. } if key == "fig2/1/2/answer" => Some(request.clone()),
            _ => None,
        })
        .unwrap();
    let prompt = &grounded.messages.last().unwrap().content;
    assert!(prompt.starts_with("Answer the question using this information: There are many different grains"));
    assert!(prompt.ends_with(&format!("Question: {}", r.initial_prompt)));
}

#[test]
fn provenance_is_the_last_shots_kept_hits() {
    let out = run_preset(Preset::Run1, "corpus_junk.jsonl", 1);
    let corpus = Corpus::new(grg_core::corpus::load_corpus(fixture("corpus_junk.jsonl")).unwrap()).unwrap();
    for t in &out.turns {
        let r = &t.result;
        let last = r.shots.last().unwrap();
        let ids: Vec<&str> = r.provenance.iter().map(|h| h.passage_id.as_str()).collect();
        assert_eq!(ids, last.kept_after_filter.iter().map(String::as_str).collect::<Vec<_>>());
        for (i, h) in r.provenance.iter().enumerate() {
            assert_eq!(h.rank, i + 1);
            assert!(corpus.get(&h.passage_id).is_some());
            assert!(last.retrieved.iter().any(|x| x.passage_id == h.passage_id && x.score == h.score));
        }
    }
}

#[test]
fn retrieve_then_generate_queries_with_the_resolved_utterance() {
    let out = run_preset(Preset::Rtg, "corpus.jsonl", 1);
    assert!(out.errors.is_empty(), "{:?}", out.errors);
    let topics = topics();
    for t in &out.turns {
        let turn = topics.iter().find(|x| x.topic_id == t.result.topic_id).unwrap().turn(t.result.turn_id).unwrap();
        let shot = &t.result.shots[0];
        let expected = turn.resolved_utterance.clone().unwrap_or_else(|| t.result.initial_prompt.clone());
        assert_eq!(shot.search_query, expected);
        assert_eq!(shot.generated_answer, None);
        assert!(t.trace.iter().all(|e| !matches!(e, TraceEvent::Call { key, .. } if key.ends_with("/answer"))));
    }
}

#[test]
fn filter_is_identity_on_reliable_corpus() {
    let r2 = run_preset(Preset::Run2, "corpus.jsonl", 1);
    let r3 = run_preset(Preset::Run3, "corpus.jsonl", 1);
    assert_eq!(r2.results(), r3.results());
    assert_eq!(r2.trace(), r3.trace());
}

#[test]
fn trace_satisfies_blindness_and_budget() {
    for preset in [Preset::Run1, Preset::Run3, Preset::Rtg] {
        let out = run_preset(preset, "corpus_junk.jsonl", 2);
        assert!(check_trace(&out.trace(), 2048).is_empty());
    }
}

#[test]
fn trace_replay_reproduces_the_run() {
    let out = run_preset(Preset::Run1, "corpus.jsonl", 1);
    let replay = Arc::new(ScriptedMock::from_trace(&out.trace()));
    let providers = Providers { answerer: replay.clone(), summarizer: replay, ..mock_providers() };
    let cfg = RunConfig::preset(Preset::Run1);
    let bundle = bundle("corpus.jsonl");
    let filter = filter();
    let again = Pipeline::new(&cfg, &providers, &bundle, Some(&filter)).unwrap().run_topics(&topics(), 3).unwrap();
    assert_eq!(again.results(), out.results());
    assert_eq!(again.trace(), out.trace());
}

#[test]
fn preset_requiring_filter_without_one_is_rejected() {
    let cfg = RunConfig::preset(Preset::Run2);
    let providers = mock_providers();
    let bundle = bundle("corpus.jsonl");
    let err = Pipeline::new(&cfg, &providers, &bundle, None).err().unwrap();
    assert_eq!(err.to_string(), "invalid run config: preset requires quality filter");
}

struct Failing;

impl ChatProvider for Failing {
    fn complete(&self, key: &CallKey, _request: &GenerationRequest) -> Result<String, GenAiError> {
        if key.topic_id == "fig2" {
            Err(GenAiError::Status { key: key.to_string(), status: 503 })
        } else {
            Ok(format!("reply for {key}"))
        }
    }
}

#[test]
fn failure_in_one_topic_leaves_others_untouched() {
    let providers = Providers { answerer: Arc::new(Failing), ..mock_providers() };
    let cfg = RunConfig::preset(Preset::Run3);
    let bundle = bundle("corpus.jsonl");
    let out = Pipeline::new(&cfg, &providers, &bundle, None).unwrap().run_topics(&topics(), 2).unwrap();
    assert_eq!(out.errors.len(), 1);
    let e = &out.errors[0];
    assert_eq!((e.topic_id.as_str(), e.turn_id, e.skipped_turns.clone()), ("fig2", 1, vec![2]));
    assert!(e.error.is_provider_failure());
    let ok: Vec<(&str, u32)> = out.turns.iter().map(|t| (t.result.topic_id.as_str(), t.result.turn_id)).collect();
    assert_eq!(ok, [("trivia", 1), ("trivia", 2)]);
}

fn one_turn_topic(utterance: &str) -> Topic {
    Topic {
        topic_id: "t".into(),
        ptkbs: vec![],
        turns: vec![Turn { turn_id: 1, utterance: utterance.into(), canonical_response: None, resolved_utterance: None }],
    }
}

#[test]
fn empty_retrieval_degrades_to_the_generated_answer() {
    let bundle = IndexBundle::build(
        vec![grg_core::corpus::Passage::new("p", "Completely unrelated text about rivers.", None)],
        IndexConfig::default(),
    )
    .unwrap();
    let script = [
        ("t/1/1/answer".to_string(), "Nothing matches this answer.".to_string()),
        ("t/1/2/answer".to_string(), "unused".to_string()),
    ];
    let mock = Arc::new(ScriptedMock::new(script.into()));
    let providers = Providers {
        answerer: mock.clone(),
        answer_cfg: ProviderConfig::default(),
        summarizer: mock,
        summary_cfg: ProviderConfig::default(),
        embedder: Arc::new(HashedLexicalEmbedder::new(384)),
    };
    let cfg = RunConfig { use_quality_filter: false, ..RunConfig::preset(Preset::Run1) };
    let pipeline = Pipeline::new(&cfg, &providers, &bundle, None).unwrap();
    let topic = one_turn_topic("Why?");
    let run = pipeline.run_turn(&topic, &topic.turns[0]).unwrap();
    assert!(run.result.degraded);
    assert_eq!(run.result.final_response, "Nothing matches this answer.");
    assert_eq!(run.result.shots.len(), 2);
    assert_eq!(run.result.shots[1].search_query, run.result.shots[0].search_query);
    assert!(run.result.provenance.is_empty());
    let degraded = run.trace.iter().filter(|e| matches!(e, TraceEvent::Degraded { .. })).count();
    assert_eq!(degraded, 2);

    let rtg = RunConfig::preset(Preset::Rtg);
    let pipeline = Pipeline::new(&rtg, &providers, &bundle, None).unwrap();
    assert!(pipeline.run_turn(&topic, &topic.turns[0]).is_err());
}
