//! Word tokenization shared by the index, the TF-IDF vectorizer and the
//! hashed embedder.

use unicode_segmentation::UnicodeSegmentation;

/// Splits `text` into Unicode words (UAX #29), optionally lowercased.
pub fn words(text: &str, lowercase: bool) -> Vec<String> {
    text.unicode_words()
        .map(|w| if lowercase { w.to_lowercase() } else { w.to_string() })
        .collect()
}

/// Whitespace-delimited token count.
pub fn whitespace_token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Reads a newline-separated data file, skipping blank lines and `#` comments.
pub(crate) fn data_lines(raw: &str) -> impl Iterator<Item = &str> {
    raw.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
}
