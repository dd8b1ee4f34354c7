use std::io::BufRead;

use super::vocab::TokenId;
use super::CorpusError;

/// Pointer value for a target word generated without a source anchor.
pub const NULL_POS: usize = 0;

/// A sentence pair with one source position (or NULL) per target word.
///
/// Source positions are 1-based internally; 0 is NULL and `|s| + 1` is the
/// FINISH index used by the operation sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedSentencePair {
    pub source: Vec<TokenId>,
    pub target: Vec<TokenId>,
    pub align: Vec<usize>,
}

impl AlignedSentencePair {
    pub fn new(
        source: Vec<TokenId>,
        target: Vec<TokenId>,
        align: Vec<usize>,
    ) -> Result<AlignedSentencePair, CorpusError> {
        if align.len() != target.len() {
            return Err(CorpusError::Contract(format!(
                "alignment length {} does not match target length {}",
                align.len(),
                target.len()
            )));
        }
        if let Some(&bad) = align.iter().find(|&&a| a > source.len()) {
            return Err(CorpusError::Contract(format!(
                "alignment index {bad} exceeds source length {}",
                source.len()
            )));
        }
        Ok(AlignedSentencePair {
            source,
            target,
            align,
        })
    }

    pub fn source_len(&self) -> usize {
        self.source.len()
    }

    /// The FINISH jump target for this pair.
    pub fn finish_pos(&self) -> usize {
        self.source.len() + 1
    }
}

/// Parse one line of 0-based `i-j` source-target pairs into this artifact's
/// per-target-position convention: `align[j]` is the 1-based source position
/// aligned to target `j`, or [`NULL_POS`] when the line leaves `j` unlinked.
/// When several links target the same position, the smallest source index
/// wins.
pub fn parse_alignment_line(
    line: &str,
    source_len: usize,
    target_len: usize,
    line_no: usize,
) -> Result<Vec<usize>, CorpusError> {
    let mut align = vec![NULL_POS; target_len];
    for pair in line.split_whitespace() {
        let (i_str, j_str) = pair.split_once('-').ok_or_else(|| CorpusError::Parse {
            line: line_no,
            message: format!("malformed alignment pair {pair:?}"),
        })?;
        let parse_idx = |s: &str| -> Result<usize, CorpusError> {
            s.parse().map_err(|_| CorpusError::Parse {
                line: line_no,
                message: format!("malformed alignment pair {pair:?}"),
            })
        };
        let i = parse_idx(i_str)?;
        let j = parse_idx(j_str)?;
        if i >= source_len || j >= target_len {
            return Err(CorpusError::Parse {
                line: line_no,
                message: format!(
                    "alignment pair {pair:?} out of range for lengths {source_len}/{target_len}"
                ),
            });
        }
        let candidate = i + 1;
        if align[j] == NULL_POS || candidate < align[j] {
            align[j] = candidate;
        }
    }
    Ok(align)
}

/// Read a Pharaoh-format alignment file, one line per sentence pair, checked
/// against the given per-sentence `(source_len, target_len)` lengths.
pub fn load_alignments<R: BufRead>(
    reader: R,
    lengths: &[(usize, usize)],
) -> Result<Vec<Vec<usize>>, CorpusError> {
    let mut out = Vec::with_capacity(lengths.len());
    let mut lines = reader.lines();
    for (idx, &(s_len, t_len)) in lengths.iter().enumerate() {
        let line_no = idx + 1;
        let line = match lines.next() {
            Some(line) => line.map_err(|e| CorpusError::Parse {
                line: line_no,
                message: format!("read error: {e}"),
            })?,
            None => {
                return Err(CorpusError::Parse {
                    line: line_no,
                    message: format!("alignment file ends before sentence {line_no}"),
                })
            }
        };
        out.push(parse_alignment_line(&line, s_len, t_len, line_no)?);
    }
    if let Some(extra) = lines.next() {
        if extra.map(|l| !l.trim().is_empty()).unwrap_or(true) {
            return Err(CorpusError::Parse {
                line: lengths.len() + 1,
                message: "alignment file has more lines than the corpus".into(),
            });
        }
    }
    Ok(out)
}
