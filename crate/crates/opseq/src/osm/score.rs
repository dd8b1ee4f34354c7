use crate::corpus::{
    replay_operations, OperationSequence, PreparedPair, SourceWord, START_ID, UNK_ID,
};
use crate::encoders::{represent_source_sentence, SentenceEncoding};
use crate::numkit::{Array, Graph, NodeRef, NumError, ParamSet};

use super::features::jump_features;
use super::model::{DecoderState, ModelError, ModelSpec, OsmModel};

/// The two log terms of a scored sentence, kept separate: the product of
/// jump probabilities and the product of word probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceScore {
    pub log_align: f64,
    pub log_word: f64,
    /// Jump decisions scored, FINISH included: word count + 1.
    pub align_decisions: usize,
    pub word_decisions: usize,
}

impl SequenceScore {
    pub fn total(&self) -> f64 {
        self.log_align + self.log_word
    }
}

/// Graph nodes for a scored sentence, used for training losses.
pub struct ScoreNodes {
    pub log_align: NodeRef,
    pub log_word: NodeRef,
    pub align_decisions: usize,
    pub word_decisions: usize,
}

impl ModelSpec {
    fn alignment_logits(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        h: NodeRef,
        emitted_emb: NodeRef,
        enc: &SentenceEncoding,
        prev_pos: usize,
        source_len: usize,
    ) -> Result<NodeRef, NumError> {
        let phi = g.constant(jump_features(prev_pos, source_len));
        let b_feat = g.param(params, self.ids.b_feat);
        let feat_term = g.matvec(phi, b_feat)?;
        let w_state = g.param(params, self.ids.w_state_align);
        let wh = g.matvec(w_state, h)?;
        let state_term = g.matvec(enc.matrix, wh)?;
        let w_word = g.param(params, self.ids.w_word_align);
        let wt = g.matvec(w_word, emitted_emb)?;
        let word_term = g.matvec(enc.matrix, wt)?;
        g.sum_n(&[feat_term, state_term, word_term])
    }

    fn word_logits(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        h: NodeRef,
    ) -> Result<NodeRef, NumError> {
        let w = g.param(params, self.ids.out_w);
        let b = g.param(params, self.ids.out_b);
        g.affine(h, w, b)
    }

    fn state_update_node(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        h: NodeRef,
        emitted_emb: NodeRef,
        source_row: NodeRef,
    ) -> Result<NodeRef, NumError> {
        let w = g.param(params, self.ids.state_w);
        let b = g.param(params, self.ids.state_b);
        g.mlp_tanh(&[h, emitted_emb, source_row], w, b)
    }

    /// Teacher-forced scoring of an operation sequence. Per word step `j`:
    /// the jump is scored from `(h_{j-1}, t_{j-1})`, the state is updated
    /// with the chosen source row, then the word is scored from `h_j` with
    /// START masked out of the support; after the last word the FINISH jump
    /// is scored. The two log terms accumulate separately.
    pub fn build_score(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        source: &[SourceWord],
        ops: &OperationSequence,
    ) -> Result<ScoreNodes, ModelError> {
        let source_len = source.len();
        let finish = source_len + 1;
        let enc = represent_source_sentence(g, params, &self.config.encoder, &self.ids.enc, source)?;

        let mut h = g.param(params, self.ids.h0);
        let mut last_word = START_ID;
        let mut prev_pos = 0usize;
        let mut align_terms = Vec::with_capacity(ops.word_count() + 1);
        let mut word_terms = Vec::with_capacity(ops.word_count());

        for (jump, word) in ops.emits() {
            if jump > source_len {
                return Err(ModelError::OpsMismatch(format!(
                    "jump target {jump} exceeds source length {source_len}"
                )));
            }
            if word as usize >= self.target_vocab.size() || word == START_ID {
                return Err(ModelError::OpsMismatch(format!(
                    "target id {word} outside the emittable vocabulary"
                )));
            }
            let emitted_emb = g.param_row(params, self.ids.tgt_emb, last_word as usize);
            let logits = self.alignment_logits(g, params, h, emitted_emb, &enc, prev_pos, source_len)?;
            let logp = g.log_softmax(logits, None)?;
            align_terms.push(g.pick(logp, jump)?);

            h = self.state_update_node(g, params, h, emitted_emb, enc.rows[jump])?;

            let wlogits = self.word_logits(g, params, h)?;
            let wlogp = g.log_softmax(wlogits, Some(START_ID as usize))?;
            word_terms.push(g.pick(wlogp, word as usize)?);

            last_word = word;
            if jump != 0 {
                prev_pos = jump;
            }
        }

        let emitted_emb = g.param_row(params, self.ids.tgt_emb, last_word as usize);
        let logits = self.alignment_logits(g, params, h, emitted_emb, &enc, prev_pos, source_len)?;
        let logp = g.log_softmax(logits, None)?;
        align_terms.push(g.pick(logp, finish)?);

        let log_align = g.sum_n(&align_terms)?;
        let log_word = if word_terms.is_empty() {
            g.scalar(0.0)
        } else {
            g.sum_n(&word_terms)?
        };
        Ok(ScoreNodes {
            log_align,
            log_word,
            align_decisions: ops.word_count() + 1,
            word_decisions: ops.word_count(),
        })
    }

    /// Negative joint log-probability, the per-sentence training loss.
    pub fn build_loss(
        &self,
        g: &mut Graph,
        params: &ParamSet,
        source: &[SourceWord],
        ops: &OperationSequence,
    ) -> Result<NodeRef, ModelError> {
        let score = self.build_score(g, params, source, ops)?;
        let total = g.add(score.log_align, score.log_word)?;
        Ok(g.neg(total))
    }

    /// Score a source sentence against an operation sequence, forward only.
    pub fn score_sequence(
        &self,
        params: &ParamSet,
        source: &[SourceWord],
        ops: &OperationSequence,
    ) -> Result<SequenceScore, ModelError> {
        let mut g = Graph::new();
        let nodes = self.build_score(&mut g, params, source, ops)?;
        Ok(SequenceScore {
            log_align: g.scalar_value(nodes.log_align),
            log_word: g.scalar_value(nodes.log_word),
            align_decisions: nodes.align_decisions,
            word_decisions: nodes.word_decisions,
        })
    }

    /// The decoder state before any operation.
    pub fn initial_state(&self, params: &ParamSet) -> DecoderState {
        DecoderState {
            h: params.value(self.ids.h0).clone(),
            last_word: START_ID,
            last_real_pos: 0,
        }
    }

    /// One state update: `h' = tanh MLP(h, R_t[last word], source row)`,
    /// where the source row is selected by the jump (0 = NULL row). The last
    /// real source position advances only on jumps to real positions.
    pub fn advance_state(
        &self,
        params: &ParamSet,
        state: &DecoderState,
        jump: usize,
        emitted: u32,
        source: &[SourceWord],
    ) -> Result<DecoderState, ModelError> {
        if jump > source.len() {
            return Err(ModelError::Argument(format!(
                "jump {jump} exceeds source length {}",
                source.len()
            )));
        }
        let mut g = Graph::new();
        let enc = represent_source_sentence(&mut g, params, &self.config.encoder, &self.ids.enc, source)?;
        let h = g.constant(state.h.clone());
        let emitted_emb = g.param_row(params, self.ids.tgt_emb, state.last_word as usize);
        let h_next = self.state_update_node(&mut g, params, h, emitted_emb, enc.rows[jump])?;
        Ok(DecoderState {
            h: g.value(h_next).clone(),
            last_word: emitted,
            last_real_pos: if jump != 0 { jump } else { state.last_real_pos },
        })
    }

    /// Word distribution from a state: `softmax(affine(h))` with START
    /// excluded from the support (probability exactly zero).
    pub fn word_distribution(
        &self,
        params: &ParamSet,
        h: &Array,
    ) -> Result<Vec<f64>, ModelError> {
        let mut g = Graph::new();
        let hn = g.constant(h.clone());
        let logits = self.word_logits(&mut g, params, hn)?;
        let logp = g.log_softmax(logits, Some(START_ID as usize))?;
        Ok(g.value(logp).data().iter().map(|l| l.exp()).collect())
    }

    /// Alignment distribution over the `|s| + 2` candidates (NULL, each
    /// source position, FINISH), given the state `h`, the word just emitted,
    /// and the last real source position.
    pub fn alignment_distribution(
        &self,
        params: &ParamSet,
        h: &Array,
        emitted: u32,
        source: &[SourceWord],
        prev_pos: usize,
    ) -> Result<Vec<f64>, ModelError> {
        let mut g = Graph::new();
        let enc = represent_source_sentence(&mut g, params, &self.config.encoder, &self.ids.enc, source)?;
        let hn = g.constant(h.clone());
        let emitted_emb = g.param_row(params, self.ids.tgt_emb, emitted as usize);
        let logits = self.alignment_logits(&mut g, params, hn, emitted_emb, &enc, prev_pos, source.len())?;
        let logp = g.log_softmax(logits, None)?;
        Ok(g.value(logp).data().iter().map(|l| l.exp()).collect())
    }
}

impl OsmModel {
    /// Score a prepared pair against its operation sequence, checking that
    /// the sequence replays to exactly that pair.
    pub fn sequence_score(
        &self,
        prepared: &PreparedPair,
        ops: &OperationSequence,
    ) -> Result<SequenceScore, ModelError> {
        let (target, align) = replay_operations(ops, prepared.pair.source_len())?;
        if target != prepared.pair.target || align != prepared.pair.align {
            return Err(ModelError::OpsMismatch(
                "operation sequence does not replay to the given pair".into(),
            ));
        }
        self.spec.score_sequence(&self.params, &prepared.source, ops)
    }

    /// Score n-best candidates for one source sentence. Each candidate is a
    /// `(target ids, alignment)` pair carrying its own hard alignment.
    /// Failures are isolated per candidate.
    pub fn score_nbest(
        &self,
        source: &[SourceWord],
        candidates: &[(Vec<u32>, Vec<usize>)],
    ) -> Vec<Result<SequenceScore, ModelError>> {
        candidates
            .iter()
            .map(|(target, align)| {
                if target.len() != align.len() {
                    return Err(ModelError::OpsMismatch(format!(
                        "candidate has {} words but {} alignment entries",
                        target.len(),
                        align.len()
                    )));
                }
                let mut steps: Vec<crate::corpus::Operation> = target
                    .iter()
                    .zip(align)
                    .map(|(&word, &jump)| crate::corpus::Operation::Emit { jump, word })
                    .collect();
                steps.push(crate::corpus::Operation::Finish);
                let ops = OperationSequence::from_steps(steps)?;
                self.spec.score_sequence(&self.params, source, &ops)
            })
            .collect()
    }

    /// Representation of an arbitrary word string under this model, for
    /// nearest-neighbour queries. Returns `None` for out-of-vocabulary
    /// queries under the word kind, which has no sub-word route.
    pub fn represent_token(&self, token: &str) -> Result<Option<Vec<f64>>, ModelError> {
        let id = self.spec.source_vocab.lookup(token);
        if !self.spec.config.encoder.kind.uses_units() && id == UNK_ID {
            return Ok(None);
        }
        let seg = self.spec.lexicon.segment(token)?;
        let word = SourceWord {
            id,
            units: seg.units,
            fallback: seg.fallback,
        };
        let mut g = Graph::new();
        let repr = crate::encoders::represent_word(
            &mut g,
            &self.params,
            &self.spec.config.encoder,
            &self.spec.ids.enc,
            &word,
        )?;
        Ok(Some(g.value(repr.node).data().to_vec()))
    }
}
