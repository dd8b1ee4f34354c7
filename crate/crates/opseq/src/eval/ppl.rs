use crate::osm::{Example, ModelError, OsmModel};

use super::EvalError;

/// Corpus-level word and alignment perplexities: the exponentiated mean
/// negative log-probability of each decision stream, token-averaged over the
/// whole set with natural logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerplexityReport {
    pub word_ppl: f64,
    pub align_ppl: f64,
    pub word_decisions: usize,
    pub align_decisions: usize,
}

pub fn perplexities(model: &OsmModel, set: &[Example]) -> Result<PerplexityReport, EvalError> {
    if set.is_empty() {
        return Err(EvalError::Argument("perplexity of an empty set".into()));
    }
    let mut log_word = 0.0;
    let mut log_align = 0.0;
    let mut words = 0usize;
    let mut aligns = 0usize;
    for example in set {
        let score = model
            .spec
            .score_sequence(&model.params, &example.source, &example.ops)
            .map_err(|e: ModelError| EvalError::Model(e.to_string()))?;
        log_word += score.log_word;
        log_align += score.log_align;
        words += score.word_decisions;
        aligns += score.align_decisions;
    }
    // zero decisions leave the corresponding perplexity at its floor of 1
    let word_ppl = if words == 0 { 1.0 } else { (-log_word / words as f64).exp() };
    let align_ppl = if aligns == 0 { 1.0 } else { (-log_align / aligns as f64).exp() };
    Ok(PerplexityReport {
        word_ppl,
        align_ppl,
        word_decisions: words,
        align_decisions: aligns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{
        extract_operations, PreparedPair, SegmentationLexicon, Vocabulary,
    };
    use crate::encoders::{EncoderConfig, EncoderKind};
    use crate::corpus::UnitMode;
    use crate::osm::{ModelConfig, OsmModel};

    fn uniform_model() -> (OsmModel, Vec<Example>) {
        let src: Vec<String> = std::iter::repeat_n("a".to_string(), 6).collect();
        let tgt: Vec<String> = ["p", "q"]
            .iter()
            .flat_map(|t| std::iter::repeat_n(t.to_string(), 6))
            .collect();
        let source_vocab = Vocabulary::build(src.iter().map(|s| s.as_str()), 5).unwrap();
        // V_T = UNK, START, p, q -> two non-START words would give word
        // perplexity 3 over {UNK, p, q}
        let target_vocab = Vocabulary::build(tgt.iter().map(|s| s.as_str()), 5).unwrap();
        let lexicon = SegmentationLexicon::char_mode(src.iter().map(|s| s.as_str()));
        let mut enc = EncoderConfig::new(EncoderKind::Word, UnitMode::Char);
        enc.word_dim = 4;
        let mut config = ModelConfig::new(enc);
        config.target_dim = 3;
        config.state_dim = 4;
        let mut model = OsmModel::init(config, source_vocab, target_vocab, lexicon, 3).unwrap();
        for id in model.params.ids().collect::<Vec<_>>() {
            model.params.value_mut(id).fill(0.0);
        }
        let p = PreparedPair::new(
            &["a".to_string()],
            &["p".to_string()],
            vec![1],
            &model.spec.source_vocab,
            &model.spec.target_vocab,
            &model.spec.lexicon,
        )
        .unwrap();
        let examples = vec![Example {
            source: p.source.clone(),
            ops: extract_operations(&p.pair),
        }];
        (model, examples)
    }

    #[test]
    fn uniform_analytic_perplexities() {
        let (model, examples) = uniform_model();
        let report = perplexities(&model, &examples).unwrap();
        assert!((report.word_ppl - 3.0).abs() < 1e-9);
        assert!((report.align_ppl - 3.0).abs() < 1e-9);
    }

    #[test]
    fn two_emittable_words_give_word_ppl_two() {
        // all-zero parameters, one source word, a single real target type:
        // the word softmax spreads over {UNK, p} while each jump decision
        // spreads over {NULL, position 1, FINISH}
        let src: Vec<String> = std::iter::repeat("a".to_string()).take(6).collect();
        let tgt: Vec<String> = std::iter::repeat("p".to_string()).take(6).collect();
        let source_vocab = Vocabulary::build(src.iter().map(|s| s.as_str()), 5).unwrap();
        let target_vocab = Vocabulary::build(tgt.iter().map(|s| s.as_str()), 5).unwrap();
        assert_eq!(target_vocab.size(), 3);
        let lexicon = SegmentationLexicon::char_mode(src.iter().map(|s| s.as_str()));
        let mut enc = EncoderConfig::new(EncoderKind::Word, UnitMode::Char);
        enc.word_dim = 4;
        let mut config = ModelConfig::new(enc);
        config.target_dim = 3;
        config.state_dim = 4;
        let mut model = OsmModel::init(config, source_vocab, target_vocab, lexicon, 3).unwrap();
        for id in model.params.ids().collect::<Vec<_>>() {
            model.params.value_mut(id).fill(0.0);
        }
        let p = PreparedPair::new(
            &["a".to_string()],
            &["p".to_string()],
            vec![1],
            &model.spec.source_vocab,
            &model.spec.target_vocab,
            &model.spec.lexicon,
        )
        .unwrap();
        let examples = vec![Example {
            ops: extract_operations(&p.pair),
            source: p.source,
        }];
        let report = perplexities(&model, &examples).unwrap();
        assert!((report.word_ppl - 2.0).abs() < 1e-9);
        assert!((report.align_ppl - 3.0).abs() < 1e-9);
    }

    #[test]
    fn perplexity_two_when_every_decision_has_probability_half() {
        // analytic check straight from the definition
        let log_half = 0.5f64.ln();
        let word_ppl = (-(log_half * 4.0) / 4.0f64).exp();
        assert!((word_ppl - 2.0).abs() < 1e-12);
    }

    #[test]
    fn duplicating_the_corpus_leaves_perplexities_unchanged() {
        let (model, examples) = uniform_model();
        let once = perplexities(&model, &examples).unwrap();
        let twice_set: Vec<Example> = examples.iter().cloned().chain(examples.iter().cloned()).collect();
        let twice = perplexities(&model, &twice_set).unwrap();
        assert!((once.word_ppl - twice.word_ppl).abs() < 1e-12);
        assert!((once.align_ppl - twice.align_ppl).abs() < 1e-12);
    }

    #[test]
    fn empty_set_is_an_argument_error() {
        let (model, _) = uniform_model();
        assert!(matches!(
            perplexities(&model, &[]),
            Err(EvalError::Argument(_))
        ));
    }

    #[test]
    fn perplexities_are_at_least_one() {
        let (model, examples) = uniform_model();
        let report = perplexities(&model, &examples).unwrap();
        assert!(report.word_ppl >= 1.0);
        assert!(report.align_ppl >= 1.0);
    }
}
