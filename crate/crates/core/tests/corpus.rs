mod common;

use std::io::Write;

use common::fixture;
use grg_core::corpus::{load_corpus, load_topics, load_wikitext, parse_topics, save_corpus, split_sentences, Passage};
use grg_core::quality::QualityLabel;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct SentenceCase {
    text: String,
    sentences: Vec<String>,
}

#[test]
fn sentence_splitter_matches_hand_segmented_fixture() {
    let raw = std::fs::read_to_string(fixture("sentences.json")).unwrap();
    let cases: Vec<SentenceCase> = serde_json::from_str(&raw).unwrap();
    assert_eq!(cases.iter().map(|c| c.sentences.len()).sum::<usize>(), 50);
    for c in &cases {
        assert_eq!(split_sentences(&c.text), c.sentences, "{:?}", c.text);
    }
}

#[test]
fn fixture_corpus_loads_in_order() {
    let passages = load_corpus(fixture("corpus.jsonl")).unwrap();
    assert_eq!(passages.len(), 12);
    assert_eq!(passages[0].id, "veg-grains");
    assert_eq!(passages[11].id, "coaster");
    assert!(passages.iter().all(|p| p.url.is_some() && !p.sentences.is_empty()));
}

#[test]
fn corpus_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("copy.jsonl");
    save_corpus(&load_corpus(fixture("corpus_junk.jsonl")).unwrap(), &out).unwrap();
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(fixture("corpus_junk.jsonl")).unwrap());
}

#[test]
fn duplicate_ids_are_reported_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.jsonl");
    let mut f = std::fs::File::create(&path).unwrap();
    for (i, id) in ["d0", "d1", "d2", "d3", "d1"].iter().enumerate() {
        writeln!(f, r#"{{"id": "{id}", "text": "text {i}"}}"#).unwrap();
    }
    drop(f);
    assert_eq!(load_corpus(&path).unwrap_err().to_string(), "duplicate id d1 (line 5)");
    std::fs::write(&path, "{\"id\": \"a\", \"text\": \"ok\"}\n{\"id\": \"b\"\n").unwrap();
    assert!(load_corpus(&path).unwrap_err().to_string().starts_with("line 2: malformed record"));
}

#[test]
fn fixture_topics_parse() {
    let topics = load_topics(fixture("topics.json")).unwrap();
    assert_eq!(topics.len(), 2);
    let fig2 = &topics[0];
    assert_eq!(fig2.ptkbs.len(), 4);
    assert_eq!(fig2.turns.len(), 2);
    assert_eq!(fig2.turns[0].utterance, "What is a good diet?");
    assert!(fig2.turns[0].canonical_response.is_some());
}

#[test]
fn topic_schema_errors_point_at_the_field() {
    let gap = r#"{"topics": [{"topic_id": "t", "turns": [
        {"turn_id": 1, "utterance": "a"}, {"turn_id": 3, "utterance": "b"}]}]}"#;
    let err = parse_topics(gap).unwrap_err().to_string();
    assert!(err.starts_with("/topics/0/turns/1/turn_id: non-consecutive turn ids"), "{err}");
    let wrong_type = r#"{"topics": [{"topic_id": "t", "turns": [{"turn_id": "x", "utterance": "a"}]}]}"#;
    let err = parse_topics(wrong_type).unwrap_err().to_string();
    assert!(err.starts_with("/topics/0/turns/0/turn_id:"), "{err}");
}

#[test]
fn topics_parse_deterministically() {
    let raw = std::fs::read_to_string(fixture("topics.json")).unwrap();
    assert_eq!(parse_topics(&raw).unwrap(), parse_topics(&raw).unwrap());
}

#[test]
fn wikitext_dump_of_1000_entries_gives_1000_reliable_docs() {
    let mut dump = String::new();
    for i in 0..1000 {
        dump.push_str(&format!(" = Article {i} = \n\n Article {i} is an entry . \n\n = = History = = \n\n It has history . \n\n"));
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wiki.train.tokens");
    std::fs::write(&path, dump).unwrap();
    let docs = load_wikitext(&path).unwrap();
    assert_eq!(docs.len(), 1000);
    assert!(docs.iter().all(|d| d.label == QualityLabel::Reliable));
}

fn non_ws(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

proptest! {
    #[test]
    fn sentences_cover_the_text(words in prop::collection::vec("[A-Za-z]{1,8}(\\.|!|\\?|,)?|Mr\\.|U\\.S\\.|\\(x\\)|e\\.g\\.", 1..40)) {
        let text = words.join(" ");
        let p = Passage::new("p", text.clone(), None);
        prop_assert!(!p.sentences.is_empty());
        prop_assert_eq!(non_ws(&p.sentences.join(" ")), non_ws(&text));
        for s in &p.sentences {
            prop_assert!(text.contains(s.as_str()));
        }
    }
}
