//! Review ingestion, sentence splitting and the line-delimited table format.
//!
//! A table file holds one JSON object per line. Reviews and sentences share
//! the file and are told apart by a `"record"` tag; the per-product index is
//! rebuilt on load.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MIN_WORDS: usize = 3;
pub const DEFAULT_MAX_SENTENCES_PER_REVIEW: usize = 20;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("sentence {sentence_id} references a review that is not in the table")]
    DanglingSentence { sentence_id: usize },
    #[error("sentence ids are not dense: expected {expected}, found {found}")]
    SparseSentenceIds { expected: usize, found: usize },
    #[error("invalid split parameters: min_words={min_words}, max_sentences={max_sentences}")]
    BadSplitParams {
        min_words: usize,
        max_sentences: usize,
    },
}

/// The dedup key of a review.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReviewKey {
    pub user_id: String,
    pub product_id: String,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewRecord {
    pub user_id: String,
    #[serde(alias = "parent_asin")]
    pub product_id: String,
    pub timestamp: i64,
    #[serde(default)]
    pub title: String,
    pub text: String,
    #[serde(default, alias = "helpful_vote")]
    pub helpful_votes: u64,
    #[serde(default, alias = "verified_purchase")]
    pub verified: bool,
}

impl ReviewRecord {
    pub fn key(&self) -> ReviewKey {
        ReviewKey {
            user_id: self.user_id.clone(),
            product_id: self.product_id.clone(),
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub sentence_id: usize,
    pub review_key: ReviewKey,
    pub user_id: String,
    pub product_id: String,
    pub text: String,
    pub token_count: usize,
}

/// Reviews, their sentences and a product → sentence-id index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusTables {
    pub reviews: Vec<ReviewRecord>,
    pub sentences: Vec<SentenceRecord>,
    product_index: BTreeMap<String, Vec<usize>>,
}

impl CorpusTables {
    pub fn from_parts(
        reviews: Vec<ReviewRecord>,
        sentences: Vec<SentenceRecord>,
    ) -> Result<Self, CorpusError> {
        let mut tables = Self {
            reviews,
            sentences,
            product_index: BTreeMap::new(),
        };
        tables.validate()?;
        tables.rebuild_index();
        Ok(tables)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let keys: std::collections::HashSet<ReviewKey> =
            self.reviews.iter().map(ReviewRecord::key).collect();
        for (expected, s) in self.sentences.iter().enumerate() {
            if s.sentence_id != expected {
                return Err(CorpusError::SparseSentenceIds {
                    expected,
                    found: s.sentence_id,
                });
            }
            if !keys.contains(&s.review_key) {
                return Err(CorpusError::DanglingSentence {
                    sentence_id: s.sentence_id,
                });
            }
        }
        Ok(())
    }

    fn rebuild_index(&mut self) {
        self.product_index.clear();
        for s in &self.sentences {
            self.product_index
                .entry(s.product_id.clone())
                .or_default()
                .push(s.sentence_id);
        }
    }

    /// Sentence ids of one product, in corpus order.
    pub fn product_sentences(&self, product_id: &str) -> Option<&[usize]> {
        self.product_index.get(product_id).map(Vec::as_slice)
    }

    pub fn product_ids(&self) -> impl Iterator<Item = &str> {
        self.product_index.keys().map(String::as_str)
    }

    pub fn sentence(&self, sentence_id: usize) -> Option<&SentenceRecord> {
        self.sentences.get(sentence_id)
    }
}

/// Why a raw record was rejected during ingest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IngestIssue {
    /// Position of the record in the input sequence.
    pub position: usize,
    pub reason: String,
}

/// Deduplicates on (user_id, product_id, timestamp).
///
/// Among duplicates the larger `helpful_votes` wins, then `verified = true`,
/// then the first-seen record. Survivors keep the order in which their key
/// first appeared.
pub fn ingest<I>(records: I) -> (CorpusTables, Vec<IngestIssue>)
where
    I: IntoIterator<Item = ReviewRecord>,
{
    let mut issues = Vec::new();
    let mut slots: HashMap<ReviewKey, usize> = HashMap::new();
    let mut kept: Vec<ReviewRecord> = Vec::new();

    for (position, record) in records.into_iter().enumerate() {
        let reason = if record.user_id.trim().is_empty() {
            Some("empty user_id")
        } else if record.product_id.trim().is_empty() {
            Some("empty product_id")
        } else if record.text.trim().is_empty() {
            Some("empty text")
        } else {
            None
        };
        if let Some(reason) = reason {
            issues.push(IngestIssue {
                position,
                reason: reason.to_string(),
            });
            continue;
        }

        match slots.get(&record.key()) {
            Some(&slot) => {
                let current = &kept[slot];
                let better = record.helpful_votes > current.helpful_votes
                    || (record.helpful_votes == current.helpful_votes
                        && record.verified
                        && !current.verified);
                if better {
                    kept[slot] = record;
                }
            }
            None => {
                slots.insert(record.key(), kept.len());
                kept.push(record);
            }
        }
    }

    let tables = CorpusTables {
        reviews: kept,
        sentences: Vec::new(),
        product_index: BTreeMap::new(),
    };
    (tables, issues)
}

/// Collapses whitespace runs and splits on `.`, `!` or `?` followed by
/// whitespace. The terminal punctuation stays with its sentence.
pub fn split_sentences(text: &str) -> Vec<String> {
    let normalized = text.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut out = Vec::new();
    let mut current = String::new();
    let mut chars = normalized.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek() == Some(&' ') {
            chars.next();
            out.push(std::mem::take(&mut current));
        }
    }
    if !current.trim().is_empty() {
        out.push(current);
    }
    out
}

pub fn token_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Populates the sentence table from the ingested reviews.
pub fn sentence_split(
    mut tables: CorpusTables,
    min_words: usize,
    max_sentences_per_review: usize,
) -> Result<CorpusTables, CorpusError> {
    if min_words == 0 || max_sentences_per_review == 0 {
        return Err(CorpusError::BadSplitParams {
            min_words,
            max_sentences: max_sentences_per_review,
        });
    }
    let mut sentences = Vec::new();
    for review in &tables.reviews {
        let key = review.key();
        let kept = split_sentences(&review.text)
            .into_iter()
            .map(|text| (token_count(&text), text))
            .filter(|(n, _)| *n >= min_words)
            .take(max_sentences_per_review);
        for (n, text) in kept {
            sentences.push(SentenceRecord {
                sentence_id: sentences.len(),
                review_key: key.clone(),
                user_id: review.user_id.clone(),
                product_id: review.product_id.clone(),
                text,
                token_count: n,
            });
        }
    }
    tables.sentences = sentences;
    tables.rebuild_index();
    Ok(tables)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TableLine {
    Review(ReviewRecord),
    Sentence(SentenceRecord),
}

pub fn save_tables(tables: &CorpusTables, path: &Path) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut writer = BufWriter::new(file);
    write_tables(tables, &mut writer).map_err(io_err)?;
    writer.flush().map_err(io_err)
}

pub fn write_tables<W: Write>(tables: &CorpusTables, writer: &mut W) -> std::io::Result<()> {
    for r in &tables.reviews {
        serde_json::to_writer(&mut *writer, &TableLine::Review(r.clone()))?;
        writer.write_all(b"\n")?;
    }
    for s in &tables.sentences {
        serde_json::to_writer(&mut *writer, &TableLine::Sentence(s.clone()))?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn load_tables(path: &Path) -> Result<CorpusTables, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_tables(BufReader::new(file))
}

pub fn read_tables<R: BufRead>(reader: R) -> Result<CorpusTables, CorpusError> {
    let mut reviews = Vec::new();
    let mut sentences = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: TableLine = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: line_no,
            message: format!("column {}: {}", e.column(), e),
        })?;
        match parsed {
            TableLine::Review(r) => reviews.push(r),
            TableLine::Sentence(s) => sentences.push(s),
        }
    }
    CorpusTables::from_parts(reviews, sentences)
}

/// Reads raw review records, one JSON object per line. Lines that fail to
/// parse are reported as issues and skipped.
pub fn read_raw_records<R: BufRead>(reader: R) -> Result<(Vec<ReviewRecord>, Vec<IngestIssue>), CorpusError> {
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<ReviewRecord>(&line) {
            Ok(r) => records.push(r),
            Err(e) => issues.push(IngestIssue {
                position: i,
                reason: format!("line {}: {}", i + 1, e),
            }),
        }
    }
    Ok((records, issues))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn review(user: &str, product: &str, ts: i64, votes: u64, verified: bool, text: &str) -> ReviewRecord {
        ReviewRecord {
            user_id: user.into(),
            product_id: product.into(),
            timestamp: ts,
            title: String::new(),
            text: text.into(),
            helpful_votes: votes,
            verified,
        }
    }

    #[test]
    fn larger_helpful_vote_count_wins() {
        let (t, issues) = ingest(vec![
            review("u", "p", 1, 3, true, "first copy"),
            review("u", "p", 1, 5, false, "second copy"),
        ]);
        assert!(issues.is_empty());
        assert_eq!(t.reviews.len(), 1);
        assert_eq!(t.reviews[0].helpful_votes, 5);
    }

    #[test]
    fn vote_ties_prefer_verified_then_first_seen() {
        let (t, _) = ingest(vec![
            review("u", "p", 1, 2, false, "a"),
            review("u", "p", 1, 2, true, "b"),
            review("u", "p", 1, 2, true, "c"),
        ]);
        assert_eq!(t.reviews.len(), 1);
        assert_eq!(t.reviews[0].text, "b");
    }

    #[test]
    fn single_record_passes_through() {
        let r = review("u", "p", 7, 0, false, "Fine product overall.");
        let (t, _) = ingest(vec![r.clone()]);
        assert_eq!(t.reviews, vec![r]);
    }

    #[test]
    fn empty_ids_are_reported_and_skipped() {
        let (t, issues) = ingest(vec![
            review("", "p", 1, 0, false, "x y z"),
            review("u", " ", 1, 0, false, "x y z"),
            review("u", "p", 1, 0, false, "x y z"),
        ]);
        assert_eq!(t.reviews.len(), 1);
        assert_eq!(
            issues.iter().map(|i| i.position).collect::<Vec<_>>(),
            vec![0, 1]
        );
    }

    #[test]
    fn split_drops_short_sentences() {
        let (t, _) = ingest(vec![review("u", "p", 1, 0, false, "Great. Too rough for my face!")]);
        let t = sentence_split(t, 2, 20).unwrap();
        assert_eq!(t.sentences.len(), 1);
        assert_eq!(t.sentences[0].text, "Too rough for my face!");
        assert_eq!(t.sentences[0].token_count, 5);
    }

    #[test]
    fn whitespace_only_text_gives_no_sentences() {
        assert!(split_sentences("   ").is_empty());
        assert!(split_sentences("").is_empty());
    }

    #[test]
    fn cap_keeps_the_first_sentences() {
        let text: String = (0..30).map(|i| format!("Sentence number {i} here. ")).collect();
        let (t, _) = ingest(vec![review("u", "p", 1, 0, false, &text)]);
        let t = sentence_split(t, 3, 20).unwrap();
        assert_eq!(t.sentences.len(), 20);
        assert_eq!(t.sentences[19].text, "Sentence number 19 here.");
        assert_eq!(t.product_sentences("p").unwrap().len(), 20);
    }

    #[test]
    fn punctuation_without_whitespace_does_not_split() {
        assert_eq!(
            split_sentences("Costs 3.50 dollars. Worth it!"),
            vec!["Costs 3.50 dollars.", "Worth it!"]
        );
    }

    #[test]
    fn truncated_file_reports_line() {
        let (t, _) = ingest(vec![review("u", "p", 1, 0, false, "One two three. Four five six.")]);
        let t = sentence_split(t, 3, 20).unwrap();
        let mut buf = Vec::new();
        write_tables(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 10];
        match read_tables(cut.as_bytes()) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_tables() {
        let t = read_tables("".as_bytes()).unwrap();
        assert_eq!(t, CorpusTables::default());
    }

    #[test]
    fn raw_records_accept_upstream_field_names() {
        let line = r#"{"user_id":"A1","parent_asin":"B0","timestamp":5,"title":"t","text":"Nice soft cloth.","helpful_vote":2,"verified_purchase":true,"rating":5.0}"#;
        let (records, issues) = read_raw_records(line.as_bytes()).unwrap();
        assert!(issues.is_empty());
        assert_eq!(records[0].product_id, "B0");
        assert_eq!(records[0].helpful_votes, 2);
        assert!(records[0].verified);
    }
}
