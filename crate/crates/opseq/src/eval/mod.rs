//! Extrinsic and intrinsic evaluation: perplexities, cosine nearest
//! neighbours, pivot synonyms with multi-label accuracy, tag and lemma
//! similarity, and frequency-band report tables.

mod morph;
mod neighbors;
mod pivot;
mod ppl;
mod report;

use thiserror::Error;

pub use morph::{hamming_similarity, TagLexicon};
pub use neighbors::{
    cosine, lexicon_embeddings, nearest_neighbors, query_neighbors, LexiconEmbeddings,
    LexiconEntry, Neighbor, NeighborOutcome,
};
pub use pivot::{multilabel_accuracy, TranslationTable};
pub use ppl::{perplexities, PerplexityReport};
pub use report::{band_report, BandCell, BandReport};

/// Errors raised by evaluation procedures.
#[derive(Debug, Error)]
pub enum EvalError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model error: {0}")]
    Model(String),
}
