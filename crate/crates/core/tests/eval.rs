mod common;

use std::collections::BTreeMap;

use common::oracle;
use common::{run_preset, run_to_dir};
use grg_core::eval::{
    compare_runs, emit_run_file, evaluate, load_run, ndcg_at_k, parse_run, success_at_1, EvalError, MetricReport, Qrels,
};
use grg_core::index::SearchHit;
use grg_core::pipeline::Preset;
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn random_instance(rng: &mut StdRng) -> (Vec<String>, BTreeMap<String, u32>) {
    let pool: Vec<String> = (0..rng.random_range(1..30)).map(|i| format!("d{i}")).collect();
    let mut qrels = BTreeMap::new();
    for d in &pool {
        if rng.random_bool(0.5) {
            qrels.insert(d.clone(), rng.random_range(0..4));
        }
    }
    let mut ranking = pool.clone();
    ranking.shuffle(rng);
    ranking.truncate(rng.random_range(0..=pool.len()));
    (ranking, qrels)
}

#[test]
fn metrics_match_oracle_on_random_instances() {
    let mut rng = StdRng::seed_from_u64(200);
    for _ in 0..200 {
        let (ranking, qrels) = random_instance(&mut rng);
        for k in [1, 3, 5, 10, 20] {
            assert!((ndcg_at_k(&ranking, &qrels, k) - oracle::ndcg(&ranking, &qrels, k)).abs() < 1e-9);
        }
        assert_eq!(success_at_1(&ranking, &qrels), oracle::success1(&ranking, &qrels));
    }
}

#[test]
fn evaluate_means_are_sum_over_count() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut run = String::new();
    let mut judged = String::new();
    for q in 0..15 {
        let (ranking, qrels) = random_instance(&mut rng);
        for (i, d) in ranking.iter().enumerate() {
            run.push_str(&format!("q{q} Q0 {d} {} {} tag\n", i + 1, 100 - i));
        }
        if q % 4 != 0 {
            for (d, g) in &qrels {
                judged.push_str(&format!("q{q} 0 {d} {g}\n"));
            }
        }
    }
    let report = evaluate(&parse_run(run.as_bytes()).unwrap(), &Qrels::parse(judged.as_bytes()).unwrap());
    let n = report.per_query.len() as f64;
    let s1: f64 = report.per_query.values().map(|m| m.success_1).sum();
    let n5: f64 = report.per_query.values().map(|m| m.ndcg_cut_5).sum();
    assert_eq!(report.mean.success_1, s1 / n);
    assert_eq!(report.mean.ndcg_cut_5, n5 / n);
    assert_eq!(report.evaluated + report.skipped.len(), parse_run(run.as_bytes()).unwrap().iter().map(|l| &l.query_id).collect::<std::collections::BTreeSet<_>>().len());
    assert!(report.per_query.values().all(|m| (0.0..=1.0).contains(&m.ndcg_cut_10)));
}

#[test]
fn report_json_round_trips() {
    let r = MetricReport::from_means(0.5, 0.25, 0.125);
    let back: MetricReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
    assert_eq!(r, back);
}

#[test]
fn two_reports_render_two_rows() {
    let t = compare_runs(&[
        ("a", MetricReport::from_means(0.1, 0.2, 0.3)),
        ("b", MetricReport::from_means(0.4, 0.5, 0.6)),
    ])
    .unwrap();
    assert_eq!(t.lines().count(), 3);
    assert_eq!(t.lines().nth(2).unwrap(), "b    0.4000  0.5000  0.6000");
}

#[test]
fn run_file_emission_is_sorted_and_reproducible() {
    let out = run_preset(Preset::Run3, "corpus.jsonl", 2);
    let results = out.results();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.trec"), dir.path().join("b.trec"));
    emit_run_file(&results, "run3", &a).unwrap();
    emit_run_file(&results, "run3", &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let lines = load_run(&a).unwrap();
    let total: usize = results.iter().map(|r| r.provenance.len()).sum();
    assert_eq!(lines.len(), total);
    let keys: Vec<(String, usize)> = lines.iter().map(|l| (l.query_id.clone(), l.rank)).collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(lines.iter().any(|l| l.query_id == "fig2_1" && l.rank == 1 && l.doc_id == "veg-grains"));
}

#[test]
fn three_hits_give_three_lines_and_bad_order_is_refused() {
    let mut r = run_preset(Preset::Run3, "corpus.jsonl", 1).results().remove(0);
    r.provenance = (1..=3).map(|i| SearchHit { passage_id: format!("p{i}"), score: 4.0 - i as f64, rank: i }).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.trec");
    emit_run_file(std::slice::from_ref(&r), "t", &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), "fig2_1 Q0 p1 1 3 t\nfig2_1 Q0 p2 2 2 t\nfig2_1 Q0 p3 3 1 t\n");
    r.provenance[2].score = 10.0;
    let bad = dir.path().join("bad.trec");
    assert!(matches!(emit_run_file(&[r], "t", &bad), Err(EvalError::InvalidRun { .. })));
    assert!(!bad.exists());
    assert!(matches!(emit_run_file(&[], "t", &bad), Err(EvalError::EmptyRun)));
}

#[test]
fn run_directory_evaluates_against_fixture_qrels() {
    let dir = run_to_dir(Preset::Run3, "corpus.jsonl", 1);
    let run = load_run(dir.path().join("run.trec")).unwrap();
    let qrels = Qrels::parse("fig2_1 0 veg-grains 2\nfig2_1 0 med-plan 3\ntrivia_1 0 solar 2\nnone_1 0 x 1\n".as_bytes()).unwrap();
    let report = evaluate(&run, &qrels);
    assert_eq!(report.evaluated, 2);
    assert_eq!(report.skipped, ["fig2_2", "trivia_2"]);
    assert_eq!(report.per_query["fig2_1"].success_1, 1.0);
    assert_eq!(report.per_query["trivia_1"].ndcg_cut_5, 1.0);
}

fn instance() -> impl Strategy<Value = (Vec<String>, BTreeMap<String, u32>)> {
    (1usize..15).prop_flat_map(|n| {
        let docs: Vec<String> = (0..n).map(|i| format!("d{i}")).collect();
        (Just(docs.clone()).prop_shuffle(), prop::collection::vec(0u32..4, n)).prop_map(move |(ranking, grades)| {
            let qrels = docs.iter().cloned().zip(grades).collect();
            (ranking, qrels)
        })
    })
}

proptest! {
    #[test]
    fn ndcg_is_bounded((ranking, qrels) in instance(), k in 1usize..12) {
        let v = ndcg_at_k(&ranking, &qrels, k);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
    }

    #[test]
    fn permuting_below_k_is_irrelevant((ranking, qrels) in instance(), k in 1usize..12, seed in any::<u64>()) {
        let mut shuffled = ranking.clone();
        if shuffled.len() > k {
            shuffled[k..].shuffle(&mut StdRng::seed_from_u64(seed));
        }
        prop_assert_eq!(ndcg_at_k(&ranking, &qrels, k), ndcg_at_k(&shuffled, &qrels, k));
    }

    #[test]
    fn promoting_the_better_doc_never_hurts((ranking, qrels) in instance(), k in 2usize..12, a in 0usize..12, b in 0usize..12) {
        let top = k.min(ranking.len());
        if top < 2 {
            return Ok(());
        }
        let (a, b) = (a % top, b % top);
        let (i, j) = (a.min(b), a.max(b));
        let mut promoted = ranking.clone();
        if qrels[&ranking[i]] < qrels[&ranking[j]] {
            promoted.swap(i, j);
        }
        prop_assert!(ndcg_at_k(&promoted, &qrels, k) >= ndcg_at_k(&ranking, &qrels, k) - 1e-12);
    }
}
