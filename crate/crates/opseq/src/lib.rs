//! Hard-attention operation-sequence translation model with sub-word source
//! word encoders.
//!
//! The model generates a target sentence left to right as a sequence of
//! operations: a *jump* that moves a hard-attention pointer over the source
//! sentence (to a real position, to NULL, or to FINISH) followed by the
//! emission of a target word. Both decision streams are scored by a recurrent
//! state, and source words are encoded either atomically or compositionally
//! from characters or morphemes (bag of units, bi-LSTM, or convolution with a
//! highway combiner).
//!
//! Crate layout:
//!
//! - [`numkit`] — dense `f64` arrays, a reverse-mode computation graph, SGD,
//!   and a finite-difference gradient checker.
//! - [`corpus`] — vocabularies, sub-word segmentation, alignment files, and
//!   the bijection between aligned sentence pairs and operation sequences.
//! - [`encoders`] — the four source-word representation architectures and
//!   sentence-encoding assembly.
//! - [`osm`] — the translation model itself: jump features, alignment and
//!   word distributions, sequence scoring, training, n-best scoring.
//! - [`eval`] — perplexities, nearest-neighbour retrieval, pivot synonyms,
//!   tag/lemma similarity, and frequency-band reports.
//! - [`cli`] — command-line entry points, run configuration, and the model
//!   archive format.

pub mod cli;
pub mod corpus;
pub mod encoders;
pub mod eval;
pub mod numkit;
pub mod osm;
