use std::collections::HashMap;
use std::io::BufRead;

use super::EvalError;

/// Hamming similarity of two equal-length bit vectors, normalized to
/// `[0, 1]` by the vector length.
pub fn hamming_similarity(a: &[bool], b: &[bool]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let matching = a.iter().zip(b).filter(|(x, y)| x == y).count();
    matching as f64 / a.len() as f64
}

#[derive(Debug, Clone)]
struct TagEntry {
    lemmas: Vec<String>,
    analyses: Vec<Vec<bool>>,
}

/// Per-word grammatical analyses: sets of fixed-length feature bit vectors
/// plus lemma sets, read from a preprocessed analyser dump.
#[derive(Debug, Clone, Default)]
pub struct TagLexicon {
    entries: HashMap<String, TagEntry>,
    tag_len: usize,
}

impl TagLexicon {
    /// Parse `word<TAB>lemma1,lemma2<TAB>bits1,bits2` lines. All bit strings
    /// must share one length; entries must be non-empty.
    pub fn parse<R: BufRead>(reader: R) -> Result<TagLexicon, EvalError> {
        let mut lex = TagLexicon::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| EvalError::Parse {
                line: line_no,
                message: format!("read error: {e}"),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(word), Some(lemmas), Some(bits)) =
                (fields.next(), fields.next(), fields.next())
            else {
                return Err(EvalError::Parse {
                    line: line_no,
                    message: "expected `word<TAB>lemmas<TAB>bitstrings`".into(),
                });
            };
            let lemmas: Vec<String> = lemmas
                .split(',')
                .filter(|l| !l.is_empty())
                .map(|l| l.to_string())
                .collect();
            let mut analyses = Vec::new();
            for bitstring in bits.split(',').filter(|b| !b.is_empty()) {
                let bits: Result<Vec<bool>, EvalError> = bitstring
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        other => Err(EvalError::Parse {
                            line: line_no,
                            message: format!("invalid bit {other:?} in {bitstring:?}"),
                        }),
                    })
                    .collect();
                let bits = bits?;
                if lex.tag_len == 0 {
                    lex.tag_len = bits.len();
                } else if bits.len() != lex.tag_len {
                    return Err(EvalError::Parse {
                        line: line_no,
                        message: format!(
                            "bit vector length {} differs from {}",
                            bits.len(),
                            lex.tag_len
                        ),
                    });
                }
                analyses.push(bits);
            }
            if lemmas.is_empty() || analyses.is_empty() {
                return Err(EvalError::Parse {
                    line: line_no,
                    message: "entry needs at least one lemma and one analysis".into(),
                });
            }
            lex.entries
                .insert(word.to_string(), TagEntry { lemmas, analyses });
        }
        Ok(lex)
    }

    pub fn covers(&self, word: &str) -> bool {
        self.entries.contains_key(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Morphology similarity of two covered words: the minimum Hamming
    /// similarity over all cross pairs of their analysis sets. `None` when
    /// either word is uncovered.
    pub fn tag_similarity(&self, w1: &str, w2: &str) -> Option<f64> {
        let a = self.entries.get(w1)?;
        let b = self.entries.get(w2)?;
        let mut best = f64::INFINITY;
        for x in &a.analyses {
            for y in &b.analyses {
                best = best.min(hamming_similarity(x, y));
            }
        }
        Some(best)
    }

    /// Fraction of the given neighbours sharing at least one lemma with the
    /// word. Neighbours without coverage count as non-sharing; `None` when
    /// the word itself is uncovered or the neighbour list is empty.
    pub fn lemma_similarity(&self, word: &str, neighbors: &[&str]) -> Option<f64> {
        let entry = self.entries.get(word)?;
        if neighbors.is_empty() {
            return None;
        }
        let shared = neighbors
            .iter()
            .filter(|n| {
                self.entries
                    .get(**n)
                    .map(|e| e.lemmas.iter().any(|l| entry.lemmas.contains(l)))
                    .unwrap_or(false)
            })
            .count();
        Some(shared as f64 / neighbors.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon(lines: &str) -> TagLexicon {
        TagLexicon::parse(lines.as_bytes()).unwrap()
    }

    #[test]
    fn hamming_similarity_counts_matching_positions() {
        let a = [true, false, true, true, false];
        let b = [true, false, false, true, true];
        assert!((hamming_similarity(&a, &b) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn worked_bitstring_pair_scores_point_six() {
        let lex = lexicon("w1\tl1\t10110\nw2\tl2\t10011\n");
        assert!((lex.tag_similarity("w1", "w2").unwrap() - 0.6).abs() < 1e-12);
    }

    #[test]
    fn identical_singleton_analyses_score_one() {
        let lex = lexicon("w1\tl1\t1010\nw2\tl2\t1010\n");
        assert_eq!(lex.tag_similarity("w1", "w2").unwrap(), 1.0);
    }

    #[test]
    fn similarity_takes_the_minimum_over_cross_pairs() {
        // {A} vs {B, C}: min(sim(A,B), sim(A,C))
        let lex = lexicon("w1\tl1\t1111\nw2\tl2\t1110,0000\n");
        // sim(1111, 1110) = 0.75; sim(1111, 0000) = 0.0
        assert_eq!(lex.tag_similarity("w1", "w2").unwrap(), 0.0);
    }

    #[test]
    fn similarity_is_symmetric() {
        let lex = lexicon("w1\tl1\t1011,0001\nw2\tl2\t1110,0000\n");
        assert_eq!(
            lex.tag_similarity("w1", "w2"),
            lex.tag_similarity("w2", "w1")
        );
    }

    #[test]
    fn uncovered_words_yield_none() {
        let lex = lexicon("w1\tl1\t1010\n");
        assert!(lex.tag_similarity("w1", "zzz").is_none());
        assert!(lex.lemma_similarity("zzz", &["w1"]).is_none());
    }

    #[test]
    fn lemma_similarity_is_the_sharing_fraction() {
        let lex = lexicon(
            "q\trun\t1010\na\trun\t1010\nb\twalk\t1010\nc\trun,walk\t1010\nd\tsit\t1010\n",
        );
        let all = lex.lemma_similarity("q", &["a", "c"]).unwrap();
        assert_eq!(all, 1.0);
        let none = lex.lemma_similarity("q", &["b", "d"]).unwrap();
        assert_eq!(none, 0.0);
        let quarter = lex.lemma_similarity("q", &["a", "b", "d", "unknown"]).unwrap();
        assert_eq!(quarter, 0.25);
    }

    #[test]
    fn mismatched_bit_lengths_are_rejected() {
        assert!(TagLexicon::parse("w1\tl1\t1010\nw2\tl2\t101\n".as_bytes()).is_err());
    }
}
