//! Brute-force reference implementations, written straight from the
//! formulas without sharing code with the library.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use grg_core::corpus::Passage;
use grg_core::index::IndexConfig;

/// Scores every document for `query` by recounting terms from scratch.
pub fn bm25_all(passages: &[Passage], cfg: &IndexConfig, query: &str) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = passages.iter().map(|p| cfg.tokenize(&p.text)).collect();
    let n = docs.len() as f64;
    let avgdl = docs.iter().map(|d| d.len() as f64).sum::<f64>() / n;
    let terms: BTreeSet<String> = cfg.tokenize(query).into_iter().collect();
    passages
        .iter()
        .zip(&docs)
        .map(|(p, doc)| {
            let dl = doc.len() as f64;
            let mut score = 0.0;
            for t in &terms {
                let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                let tf = doc.iter().filter(|w| *w == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
                score += idf * tf * (cfg.k1 + 1.0) / (tf + cfg.k1 * (1.0 - cfg.b + cfg.b * dl / avgdl));
            }
            (p.id.clone(), score)
        })
        .collect()
}

/// Non-zero scores, best first, ties by id.
pub fn bm25_ranking(passages: &[Passage], cfg: &IndexConfig, query: &str) -> Vec<(String, f64)> {
    let mut scored: Vec<(String, f64)> = bm25_all(passages, cfg, query).into_iter().filter(|(_, s)| *s > 0.0).collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    scored
}

/// DCG over the full ranking cut at k, divided by the DCG of all grades
/// sorted descending cut at k.
pub fn ndcg(ranking: &[String], qrels: &BTreeMap<String, u32>, k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, d) in ranking.iter().enumerate() {
        if i >= k {
            break;
        }
        let rel = *qrels.get(d).unwrap_or(&0) as f64;
        dcg += rel / ((i + 1) as f64 + 1.0).log2();
    }
    let mut grades: Vec<u32> = qrels.values().cloned().collect();
    grades.sort();
    grades.reverse();
    let mut idcg = 0.0;
    for (i, g) in grades.iter().enumerate() {
        if i >= k {
            break;
        }
        idcg += *g as f64 / ((i + 1) as f64 + 1.0).log2();
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

pub fn success1(ranking: &[String], qrels: &BTreeMap<String, u32>) -> f64 {
    match ranking.first().and_then(|d| qrels.get(d)) {
        Some(g) if *g >= 1 => 1.0,
        _ => 0.0,
    }
}

/// Twenty queries over the fixture corpus: short keyword queries, natural
/// questions, long generated-answer style text, and stopword-only input.
pub const FIXTURE_QUERIES: [&str; 20] = [
    "diet plan",
    "What is a good diet?",
    "vegetarian protein",
    "lactose intolerant calcium",
    "olive oil",
    "Mediterranean diet heart disease",
    "Which planets have weather?",
    "What was the original planned cost for the Macintosh classic?",
    "What caused the Boeing 737 Max 8 to crash?",
    "who is the president of Georgetown University",
    "roller coaster speed",
    "the of and",
    "beans beans beans legumes",
    "The best diets for a lactose-intolerant vegetarian who would like to lose weight is the one built on many different grains, beans and legumes, vegetables, and plant oils.",
    "One such diet that involves beans and legumes, grains, vegetables, and plant oils is the Mediterranean Diet. It is a plant-based eating plan built on fruits, vegetables, whole grains and olive oil.",
    "milk cheese yogurt",
    "asteroid belt silicates metals",
    "FAA certification 2017",
    "weight loss calories fiber",
    "quinoa zzzunknownterm",
];
