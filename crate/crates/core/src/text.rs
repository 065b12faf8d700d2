//! Small text normalization helpers shared by graph construction and evaluation.

/// Collapses runs of whitespace to a single space and trims both ends.
pub fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case-folded, whitespace-collapsed form used for identity and matching.
pub fn normalize(text: &str) -> String {
    collapse_whitespace(text).to_lowercase()
}

/// Whitespace token count.
pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Lowercased alphanumeric word tokens.
pub fn words(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
}
