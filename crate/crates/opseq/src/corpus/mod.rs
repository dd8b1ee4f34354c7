//! Corpus ingestion: vocabularies, sub-word segmentation, word-alignment
//! files, and the bijection between aligned sentence pairs and operation
//! sequences.

mod align;
mod io;
mod ops;
mod segment;
mod vocab;

use thiserror::Error;

pub use align::{load_alignments, parse_alignment_line, AlignedSentencePair, NULL_POS};
pub use io::{
    prepare_source_words, read_parallel, read_segmentation_entries, read_segmentation_path,
    read_sentences, read_sentences_path, PreparedPair,
};
pub use ops::{extract_operations, replay_operations, Operation, OperationSequence};
pub use segment::{
    Segmentation, SegmentationLexicon, UnitId, UnitMode, PAD_UNIT, PAD_UNIT_TOKEN, UNK_UNIT,
    UNK_UNIT_TOKEN,
};
pub use vocab::{
    frequency_band, FrequencyBand, TokenId, Vocabulary, ALL_BANDS, START_ID, START_TOKEN, UNK_ID,
    UNK_TOKEN,
};

/// Errors raised while ingesting corpora and converting annotations.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

/// One source token prepared for encoding: its vocabulary id (UNK for rare
/// words) plus its sub-word unit ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceWord {
    pub id: TokenId,
    pub units: Vec<UnitId>,
    pub fallback: bool,
}
