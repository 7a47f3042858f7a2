//! Corpus records, deterministic transforms, and JSONL IO.
//!
//! Two transforms prepare a raw corpus for distillation: a fraction of
//! documents (default 30%) is replaced by short chunks of 1-10 sentences, and a
//! small fraction of the resulting records (default 0.08%) has its word
//! order shuffled. Both are pure functions of (corpus, plan): the same seed
//! gives byte-identical output on every platform.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::rng::{streams, RngStream};

/// One text record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    pub kind: RecordKind,
    /// For chunked records, the id of the source document.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Passage,
    Question,
    Caption,
}

/// Transform parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransformPlan {
    /// Fraction of documents replaced by sentence chunks.
    pub chunk_fraction: f64,
    /// Inclusive range of sentences per chunk.
    pub chunk_sentence_range: (usize, usize),
    /// Fraction of records whose words get shuffled.
    pub shuffle_fraction: f64,
    pub seed: u64,
}

impl Default for TransformPlan {
    fn default() -> Self {
        Self {
            chunk_fraction: 0.30,
            chunk_sentence_range: (1, 10),
            shuffle_fraction: 0.0008,
            seed: 0,
        }
    }
}

impl TransformPlan {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.chunk_fraction) {
            return Err(Error::Config("chunk_fraction must be in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.shuffle_fraction) {
            return Err(Error::Config("shuffle_fraction must be in [0, 1]".into()));
        }
        let (lo, hi) = self.chunk_sentence_range;
        if lo < 1 || hi < lo {
            return Err(Error::Config(format!(
                "chunk_sentence_range ({lo}, {hi}) invalid: need 1 <= lo <= hi"
            )));
        }
        Ok(())
    }
}

/// Counters reported after a transform pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub input_records: usize,
    pub selected_for_chunking: usize,
    pub chunks_emitted: usize,
    pub shuffled: usize,
    pub empty_filtered: usize,
    pub output_records: usize,
}

/// Apply the chunking and shuffling transforms.
///
/// Chunk selection is an independent Bernoulli draw per document; chunk
/// lengths are drawn uniformly from the plan range until the document's
/// sentences are exhausted. Shuffling is applied after chunking, per
/// record. Empty texts are dropped and counted.
pub fn apply_transforms(
    corpus: &[CorpusRecord],
    plan: &TransformPlan,
) -> (Vec<CorpusRecord>, TransformSummary) {
    let mut summary = TransformSummary {
        input_records: corpus.len(),
        ..TransformSummary::default()
    };
    let mut chunk_rng = RngStream::new(plan.seed, streams::TRANSFORM_CHUNK);
    let (lo, hi) = plan.chunk_sentence_range;

    let mut out = Vec::with_capacity(corpus.len());
    for record in corpus {
        if record.text.trim().is_empty() {
            summary.empty_filtered += 1;
            continue;
        }
        if !chunk_rng.bernoulli(plan.chunk_fraction) {
            out.push(record.clone());
            continue;
        }
        summary.selected_for_chunking += 1;
        let sentences = sentence_split(&record.text);
        if sentences.is_empty() {
            summary.empty_filtered += 1;
            continue;
        }
        let mut cursor = 0;
        let mut chunk_no = 0;
        while cursor < sentences.len() {
            let take = chunk_rng.int_in(lo as u64, hi as u64) as usize;
            let end = (cursor + take).min(sentences.len());
            let text = sentences[cursor..end].join(" ");
            out.push(CorpusRecord {
                id: format!("{}#c{}", record.id, chunk_no),
                text,
                kind: record.kind,
                source: Some(record.id.clone()),
            });
            summary.chunks_emitted += 1;
            chunk_no += 1;
            cursor = end;
        }
    }

    let mut shuffle_rng = RngStream::new(plan.seed, streams::TRANSFORM_SHUFFLE);
    for record in &mut out {
        if shuffle_rng.bernoulli(plan.shuffle_fraction) {
            record.text = word_shuffle(&record.text, &mut shuffle_rng);
            summary.shuffled += 1;
        }
    }
    summary.output_records = out.len();
    (out, summary)
}

/// Split on '.', '!' or '?' followed by whitespace or end of text, keeping
/// the delimiter. Deliberately abbreviation-naive; the rule, not linguistic
/// segmentation, is the contract.
pub fn sentence_split(text: &str) -> Vec<String> {
    let bytes = text.as_bytes();
    let mut sentences = Vec::new();
    let mut start = 0;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'.' || c == b'!' || c == b'?' {
            let at_end = i + 1 == bytes.len();
            let before_space = !at_end && bytes[i + 1].is_ascii_whitespace();
            if at_end || before_space {
                let piece = text[start..=i].trim();
                if !piece.is_empty() {
                    sentences.push(piece.to_string());
                }
                start = i + 1;
            }
        }
        i += 1;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        sentences.push(tail.to_string());
    }
    sentences
}

/// Fisher-Yates shuffle of whitespace tokens; the token multiset is
/// preserved exactly.
pub fn word_shuffle(text: &str, rng: &mut RngStream) -> String {
    let mut tokens: Vec<&str> = text.split_whitespace().collect();
    rng.shuffle(&mut tokens);
    tokens.join(" ")
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut offset = 0u64;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line_start = offset;
        offset += line.len() as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::FormatError {
            offset: line_start,
            msg: format!("bad JSONL on line {}: {e}", lineno + 1),
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn write_corpus(path: &Path, records: &[CorpusRecord]) -> Result<()> {
    let mut out = Vec::new();
    for record in records {
        serde_json::to_writer(&mut out, record).expect("corpus record serializes");
        out.push(b'\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(id: &str, text: &str) -> CorpusRecord {
        CorpusRecord {
            id: id.to_string(),
            text: text.to_string(),
            kind: RecordKind::Passage,
            source: None,
        }
    }

    #[test]
    fn split_keeps_delimiters() {
        assert_eq!(sentence_split("A. B! C?"), vec!["A.", "B!", "C?"]);
    }

    #[test]
    fn split_without_terminal_punctuation() {
        assert_eq!(
            sentence_split("No terminal punctuation"),
            vec!["No terminal punctuation"]
        );
    }

    #[test]
    fn split_is_abbreviation_naive() {
        assert_eq!(
            sentence_split("e.g. is tricky. Next."),
            vec!["e.g.", "is tricky.", "Next."]
        );
    }

    #[test]
    fn identity_plan_is_identity() {
        let corpus = vec![record("a", "One. Two."), record("b", "Hello there")];
        let plan = TransformPlan {
            chunk_fraction: 0.0,
            shuffle_fraction: 0.0,
            ..TransformPlan::default()
        };
        let (out, summary) = apply_transforms(&corpus, &plan);
        assert_eq!(out, corpus);
        assert_eq!(summary.selected_for_chunking, 0);
        assert_eq!(summary.shuffled, 0);
    }

    #[test]
    fn single_sentence_doc_chunks_to_itself() {
        let corpus = vec![record("a", "Just one sentence.")];
        let plan = TransformPlan {
            chunk_fraction: 1.0,
            shuffle_fraction: 0.0,
            seed: 3,
            ..TransformPlan::default()
        };
        let (out, summary) = apply_transforms(&corpus, &plan);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].text, "Just one sentence.");
        assert_eq!(out[0].id, "a#c0");
        assert_eq!(out[0].source.as_deref(), Some("a"));
        assert_eq!(summary.chunks_emitted, 1);
    }

    #[test]
    fn chunking_conserves_sentences() {
        let text = "One. Two! Three? Four. Five. Six! Seven. Eight? Nine. Ten. Eleven.";
        let corpus = vec![record("doc", text)];
        let plan = TransformPlan {
            chunk_fraction: 1.0,
            shuffle_fraction: 0.0,
            seed: 11,
            ..TransformPlan::default()
        };
        let (out, _) = apply_transforms(&corpus, &plan);
        let mut from_chunks: Vec<String> = out
            .iter()
            .flat_map(|r| sentence_split(&r.text))
            .collect();
        let mut original = sentence_split(text);
        from_chunks.sort();
        original.sort();
        assert_eq!(from_chunks, original);
        // provenance
        assert!(out.iter().all(|r| r.source.as_deref() == Some("doc")));
    }

    #[test]
    fn transforms_are_deterministic() {
        let corpus: Vec<CorpusRecord> = (0..200)
            .map(|i| record(&format!("d{i}"), "Alpha beta. Gamma delta! Epsilon zeta?"))
            .collect();
        let plan = TransformPlan {
            seed: 7,
            shuffle_fraction: 0.05,
            ..TransformPlan::default()
        };
        let (a, sa) = apply_transforms(&corpus, &plan);
        let (b, sb) = apply_transforms(&corpus, &plan);
        assert_eq!(a, b);
        assert_eq!(sa, sb);
        assert!(sa.shuffled > 0);
    }

    #[test]
    fn empty_texts_filtered_and_counted() {
        let corpus = vec![record("a", "  "), record("b", "Fine.")];
        let (out, summary) = apply_transforms(&corpus, &TransformPlan::default());
        assert_eq!(out.len(), 1);
        assert_eq!(summary.empty_filtered, 1);
    }

    #[test]
    fn shuffle_single_token_is_identity() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(word_shuffle("a", &mut rng), "a");
    }

    #[test]
    fn shuffle_deterministic_and_multiset_preserving() {
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 0);
        let s1 = word_shuffle("a b c", &mut a);
        let s2 = word_shuffle("a b c", &mut b);
        assert_eq!(s1, s2);
        let mut toks: Vec<&str> = s1.split_whitespace().collect();
        toks.sort_unstable();
        assert_eq!(toks, vec!["a", "b", "c"]);
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        let corpus = vec![
            record("a", "Hello."),
            CorpusRecord {
                id: "b#c0".into(),
                text: "World.".into(),
                kind: RecordKind::Question,
                source: Some("b".into()),
            },
        ];
        write_corpus(&path, &corpus).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, corpus);
    }

    proptest! {
        #[test]
        fn shuffle_preserves_token_count(text in "[a-z ]{0,60}", seed in 0u64..1000) {
            let mut rng = RngStream::new(seed, 0);
            let shuffled = word_shuffle(&text, &mut rng);
            prop_assert_eq!(
                text.split_whitespace().count(),
                shuffled.split_whitespace().count()
            );
            let mut a: Vec<&str> = text.split_whitespace().collect();
            let mut b: Vec<&str> = shuffled.split_whitespace().collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn split_never_yields_empty_sentences(text in ".{0,80}") {
            for s in sentence_split(&text) {
                prop_assert!(!s.trim().is_empty());
            }
        }
    }
}
