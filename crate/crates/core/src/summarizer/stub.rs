//! Deterministic template rewriter used offline and as the failure fallback.

use std::collections::{BTreeMap, HashSet};

use super::Bin;
use crate::corpus::split_sentences;

pub const STUB_MAX_TOKENS: usize = 80;

/// Lowercase alphanumeric words, so that punctuation and case variants of a
/// sentence collapse to one key.
pub fn normalize_for_dedup(text: &str) -> String {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| c.is_alphanumeric())
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// First sentence of each distinct evidence unit, joined and truncated to
/// [`STUB_MAX_TOKENS`] tokens.
pub fn stub_compress(evidence: &[String]) -> String {
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    for unit in evidence {
        let first = split_sentences(unit).into_iter().next().unwrap_or_default();
        if first.is_empty() {
            continue;
        }
        if seen.insert(normalize_for_dedup(&first)) {
            kept.push(first);
        }
    }
    let joined = kept.join(" ");
    joined
        .split_whitespace()
        .take(STUB_MAX_TOKENS)
        .collect::<Vec<_>>()
        .join(" ")
}

/// One "LABEL: text" paragraph per non-empty bin, HIGH then MID then LOW.
pub fn stub_stitch(bin_summaries: &BTreeMap<Bin, String>) -> String {
    Bin::ALL
        .iter()
        .filter_map(|b| {
            bin_summaries
                .get(b)
                .filter(|t| !t.is_empty())
                .map(|t| format!("{}: {t}", b.label()))
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Folds the draft into one paragraph, dropping the bin labels.
pub fn stub_polish(draft: &str) -> String {
    draft
        .lines()
        .map(|line| {
            Bin::ALL
                .iter()
                .find_map(|b| line.strip_prefix(b.label()).and_then(|r| r.strip_prefix(": ")))
                .unwrap_or(line)
                .trim()
        })
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}
