use crate::corpus::SourceWord;
use crate::numkit::Graph;
use crate::osm::{ModelError, OsmModel};

use super::EvalError;

/// Cosine similarity; zero vectors are assigned similarity zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na > 0.0 && nb > 0.0 {
        dot / (na * nb)
    } else {
        0.0
    }
}

#[derive(Debug, Clone)]
pub struct LexiconEntry {
    pub word: String,
    pub count: u64,
    pub vector: Vec<f64>,
}

/// Word representations over the training lexicon, in canonical order
/// (in-vocabulary types by id, then sub-threshold types sorted). Cosine ties
/// break by this order. Under the word kind only in-vocabulary types are
/// representable, so the lexicon is restricted to them.
#[derive(Debug, Clone)]
pub struct LexiconEmbeddings {
    pub entries: Vec<LexiconEntry>,
}

pub fn lexicon_embeddings(model: &OsmModel) -> Result<LexiconEmbeddings, EvalError> {
    let vocab = &model.spec.source_vocab;
    let words: Vec<&str> = if model.spec.config.encoder.kind.uses_units() {
        vocab.training_lexicon()
    } else {
        vocab.id_tokens().collect()
    };
    let mut entries = Vec::with_capacity(words.len());
    for word in words {
        let seg = model
            .spec
            .lexicon
            .segment(word)
            .map_err(|e| EvalError::Model(e.to_string()))?;
        let source_word = SourceWord {
            id: vocab.lookup(word),
            units: seg.units,
            fallback: seg.fallback,
        };
        let mut g = Graph::new();
        let repr = crate::encoders::represent_word(
            &mut g,
            &model.params,
            &model.spec.config.encoder,
            &model.spec.ids.enc,
            &source_word,
        )
        .map_err(|e| EvalError::Model(ModelError::Num(e).to_string()))?;
        entries.push(LexiconEntry {
            word: word.to_string(),
            count: vocab.count(word),
            vector: g.value(repr.node).data().to_vec(),
        });
    }
    Ok(LexiconEmbeddings { entries })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub cosine: f64,
}

/// Result of a neighbour query: either the ranked list or the marker that
/// the model cannot represent the query (word kind, OOV query), rendered as
/// `-` in reports.
#[derive(Debug, Clone)]
pub enum NeighborOutcome {
    Ranked(Vec<Neighbor>),
    NotRepresentable,
}

/// Top-`k` lexicon words by cosine similarity to the query vector, the query
/// word itself excluded. Ties break by lexicon order; `k` larger than the
/// lexicon returns the full ranking.
pub fn nearest_neighbors(
    lexicon: &LexiconEmbeddings,
    query_word: &str,
    query_vector: &[f64],
    k: usize,
) -> Vec<Neighbor> {
    let mut scored: Vec<(usize, f64)> = lexicon
        .entries
        .iter()
        .enumerate()
        .filter(|(_, e)| e.word != query_word)
        .map(|(i, e)| (i, cosine(query_vector, &e.vector)))
        .collect();
    scored.sort_by(|(ia, ca), (ib, cb)| cb.partial_cmp(ca).unwrap().then(ia.cmp(ib)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, c)| Neighbor {
            word: lexicon.entries[i].word.clone(),
            cosine: c,
        })
        .collect()
}

/// Query a model: `None` when the model cannot represent the word.
pub fn query_neighbors(
    model: &OsmModel,
    lexicon: &LexiconEmbeddings,
    query_word: &str,
    k: usize,
) -> Result<NeighborOutcome, EvalError> {
    match model
        .represent_token(query_word)
        .map_err(|e| EvalError::Model(e.to_string()))?
    {
        Some(vector) => Ok(NeighborOutcome::Ranked(nearest_neighbors(
            lexicon, query_word, &vector, k,
        ))),
        None => Ok(NeighborOutcome::NotRepresentable),
    }
}
