//! Corpus transforms, batching, and on-disk formats (JSONL corpus, `EMB1`
//! binary embeddings; the same container carries vision features).

pub mod batch;
pub mod corpus;
pub mod embfile;

pub use batch::{BatchCursor, BatchIter};
pub use corpus::{
    apply_transforms, read_corpus, sentence_split, word_shuffle, write_corpus, CorpusRecord,
    RecordKind, TransformPlan, TransformSummary,
};
pub use embfile::{read_embeddings, write_embeddings};
