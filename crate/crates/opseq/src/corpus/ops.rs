use super::align::AlignedSentencePair;
use super::vocab::TokenId;
use super::CorpusError;

/// One step of an operation sequence: jump the hard-attention pointer and
/// emit a target word, or finish the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operation {
    /// Jump to `jump` (0 = NULL, 1..=|s| a source position) and emit `word`.
    Emit { jump: usize, word: TokenId },
    /// The terminal jump to `|s| + 1`, emitting nothing.
    Finish,
}

/// The operation sequence of one sentence pair: exactly `|t|` word-bearing
/// steps followed by a single FINISH. Replaying a sequence reconstructs the
/// originating target and alignment exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperationSequence {
    steps: Vec<Operation>,
}

impl OperationSequence {
    /// Validates that FINISH occurs exactly once, in terminal position.
    pub fn from_steps(steps: Vec<Operation>) -> Result<OperationSequence, CorpusError> {
        let finishes = steps
            .iter()
            .filter(|s| matches!(s, Operation::Finish))
            .count();
        if finishes != 1 || !matches!(steps.last(), Some(Operation::Finish)) {
            return Err(CorpusError::Contract(
                "operation sequence must end with exactly one FINISH".into(),
            ));
        }
        Ok(OperationSequence { steps })
    }

    pub fn steps(&self) -> &[Operation] {
        &self.steps
    }

    /// The word-bearing steps, in order.
    pub fn emits(&self) -> impl Iterator<Item = (usize, TokenId)> + '_ {
        self.steps.iter().filter_map(|s| match s {
            Operation::Emit { jump, word } => Some((*jump, *word)),
            Operation::Finish => None,
        })
    }

    /// Number of emitted target words (`|t|`).
    pub fn word_count(&self) -> usize {
        self.steps.len() - 1
    }
}

/// Read off the operation sequence of an aligned pair by scanning the target
/// words left to right: step `j` jumps to `align[j]` and emits `target[j]`,
/// and the terminal step jumps to FINISH.
pub fn extract_operations(pair: &AlignedSentencePair) -> OperationSequence {
    let mut steps: Vec<Operation> = pair
        .target
        .iter()
        .zip(&pair.align)
        .map(|(&word, &jump)| Operation::Emit { jump, word })
        .collect();
    steps.push(Operation::Finish);
    OperationSequence { steps }
}

/// Exact inverse of [`extract_operations`]: recover `(target, align)` from a
/// sequence. Jump targets are checked against the given source length.
pub fn replay_operations(
    ops: &OperationSequence,
    source_len: usize,
) -> Result<(Vec<TokenId>, Vec<usize>), CorpusError> {
    let mut target = Vec::with_capacity(ops.word_count());
    let mut align = Vec::with_capacity(ops.word_count());
    for (jump, word) in ops.emits() {
        if jump > source_len {
            return Err(CorpusError::Contract(format!(
                "jump target {jump} exceeds source length {source_len}"
            )));
        }
        target.push(word);
        align.push(jump);
    }
    Ok((target, align))
}
