//! Training-set builders.
//!
//! Reliable documents come from encyclopedic text (a WikiText dump or the
//! shipped fixtures), unreliable ones from informal forum-style text, and junk
//! is synthesized by stuffing spam keywords around topic terms.

use std::sync::OnceLock;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{QualityLabel, CLASS_ORDER};
use crate::corpus::LabeledDocument;
use crate::text::data_lines;

const JUNK_KEYWORDS: &str = include_str!("../../data/junk_keywords.txt");
const SEPARABLE_VOCAB: &str = include_str!("../../data/separable_vocab.txt");

pub const SHIPPED_SEPARABLE_PER_CLASS: usize = 60;
pub const SHIPPED_SEPARABLE_SEED: u64 = 2023;

/// The shipped spam keyword list.
pub fn junk_keywords() -> &'static [String] {
    static LIST: OnceLock<Vec<String>> = OnceLock::new();
    LIST.get_or_init(|| data_lines(JUNK_KEYWORDS).map(str::to_string).collect())
}

/// Per-class vocabularies of the separable set, in class order. The three
/// lists share no words.
pub fn separable_vocabularies() -> &'static [Vec<String>; 3] {
    static VOCAB: OnceLock<[Vec<String>; 3]> = OnceLock::new();
    VOCAB.get_or_init(|| {
        let mut out: [Vec<String>; 3] = Default::default();
        let mut current: Option<usize> = None;
        for line in data_lines(SEPARABLE_VOCAB) {
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = CLASS_ORDER.iter().position(|c| c.as_str() == name);
                continue;
            }
            if let Some(c) = current {
                out[c].push(line.to_string());
            }
        }
        out
    })
}

/// `per_class` documents per label, each 6 to 14 words drawn from that
/// label's vocabulary only.
pub fn separable_set(per_class: usize, seed: u64) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = separable_vocabularies();
    let mut docs = Vec::with_capacity(per_class * 3);
    for _ in 0..per_class {
        for (c, label) in CLASS_ORDER.iter().enumerate() {
            let len = rng.random_range(6..=14);
            let words: Vec<&str> = (0..len).map(|_| vocab[c].choose(&mut rng).expect("vocab non-empty").as_str()).collect();
            docs.push(LabeledDocument::new(words.join(" "), *label));
        }
    }
    docs
}

/// The separable set used by the acceptance checks.
pub fn shipped_separable_set() -> Vec<LabeledDocument> {
    separable_set(SHIPPED_SEPARABLE_PER_CLASS, SHIPPED_SEPARABLE_SEED)
}

/// Keyword-stuffed advertising copy: each document repeats a few topic terms
/// among spam keywords, with the shouty punctuation typical of such pages.
pub fn junk_documents<S: AsRef<str>>(topic_terms: &[S], n: usize, seed: u64) -> Vec<LabeledDocument> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keywords = junk_keywords();
    (0..n)
        .map(|_| {
            let len = rng.random_range(14..=24);
            let mut parts: Vec<String> = Vec::with_capacity(len);
            for _ in 0..len {
                let word = if !topic_terms.is_empty() && rng.random_bool(0.3) {
                    topic_terms.choose(&mut rng).expect("non-empty").as_ref().to_string()
                } else {
                    keywords.choose(&mut rng).expect("keywords non-empty").clone()
                };
                parts.push(if rng.random_bool(0.2) { word.to_uppercase() + "!!!" } else { word });
            }
            LabeledDocument::new(parts.join(" "), QualityLabel::Junk)
        })
        .collect()
}
