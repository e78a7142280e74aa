//! Surface-string normalization shared by ingestion and querying.

use unicode_normalization::UnicodeNormalization;

/// Lowercases, applies Unicode NFC, trims and collapses internal whitespace
/// runs to a single space.
pub fn normalize(s: &str) -> String {
    let lowered = s.nfc().collect::<String>().to_lowercase();
    let composed: String = lowered.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// True when `s` is already in the form produced by [`normalize`].
pub fn is_normalized(s: &str) -> bool {
    normalize(s) == s
}
