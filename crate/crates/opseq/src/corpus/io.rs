use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use super::align::AlignedSentencePair;
use super::ops::{extract_operations, OperationSequence};
use super::segment::SegmentationLexicon;
use super::vocab::{TokenId, Vocabulary};
use super::{CorpusError, SourceWord};

/// Read a tokenized corpus: one sentence per line, tokens space-separated.
/// Empty lines are empty sentences.
pub fn read_sentences<R: BufRead>(reader: R) -> Result<Vec<Vec<String>>, CorpusError> {
    let mut sentences = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: format!("read error: {e}"),
        })?;
        sentences.push(line.split_whitespace().map(|t| t.to_string()).collect());
    }
    Ok(sentences)
}

pub fn read_sentences_path(path: &Path) -> Result<Vec<Vec<String>>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_sentences(BufReader::new(file))
}

/// Source and target corpora matched line by line.
pub fn read_parallel(
    source_path: &Path,
    target_path: &Path,
) -> Result<(Vec<Vec<String>>, Vec<Vec<String>>), CorpusError> {
    let source = read_sentences_path(source_path)?;
    let target = read_sentences_path(target_path)?;
    if source.len() != target.len() {
        return Err(CorpusError::Contract(format!(
            "parallel corpora disagree: {} source lines vs {} target lines",
            source.len(),
            target.len()
        )));
    }
    Ok((source, target))
}

/// Read a segmentation file: one `word<TAB>unit unit unit` entry per line.
pub fn read_segmentation_entries<R: BufRead>(
    reader: R,
) -> Result<Vec<(String, Vec<String>)>, CorpusError> {
    let mut entries = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Parse {
            line: idx + 1,
            message: format!("read error: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, rest) = line.split_once('\t').ok_or_else(|| CorpusError::Parse {
            line: idx + 1,
            message: "segmentation entry needs `word<TAB>units`".into(),
        })?;
        let units: Vec<String> = rest.split_whitespace().map(|u| u.to_string()).collect();
        if word.is_empty() || units.is_empty() {
            return Err(CorpusError::Parse {
                line: idx + 1,
                message: "segmentation entry has an empty word or unit list".into(),
            });
        }
        entries.push((word.to_string(), units));
    }
    Ok(entries)
}

pub fn read_segmentation_path(path: &Path) -> Result<Vec<(String, Vec<String>)>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    read_segmentation_entries(BufReader::new(file))
}

/// Turn a tokenized source sentence into ids plus unit sequences.
pub fn prepare_source_words(
    tokens: &[String],
    vocab: &Vocabulary,
    lexicon: &SegmentationLexicon,
) -> Result<Vec<SourceWord>, CorpusError> {
    tokens
        .iter()
        .map(|tok| {
            let seg = lexicon.segment(tok)?;
            Ok(SourceWord {
                id: vocab.lookup(tok),
                units: seg.units,
                fallback: seg.fallback,
            })
        })
        .collect()
}

/// A sentence pair ready for scoring: source ids with unit sequences, target
/// ids, and the alignment.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    pub source: Vec<SourceWord>,
    pub pair: AlignedSentencePair,
}

impl PreparedPair {
    pub fn new(
        source_tokens: &[String],
        target_tokens: &[String],
        align: Vec<usize>,
        source_vocab: &Vocabulary,
        target_vocab: &Vocabulary,
        lexicon: &SegmentationLexicon,
    ) -> Result<PreparedPair, CorpusError> {
        let source = prepare_source_words(source_tokens, source_vocab, lexicon)?;
        let source_ids: Vec<TokenId> = source.iter().map(|w| w.id).collect();
        let target_ids: Vec<TokenId> = target_tokens.iter().map(|t| target_vocab.lookup(t)).collect();
        let pair = AlignedSentencePair::new(source_ids, target_ids, align)?;
        Ok(PreparedPair { source, pair })
    }

    pub fn operations(&self) -> OperationSequence {
        extract_operations(&self.pair)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::vocab::UNK_ID;

    #[test]
    fn sentences_split_on_whitespace() {
        let data = "a b  c\n\nx\n";
        let s = read_sentences(data.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0], vec!["a", "b", "c"]);
        assert!(s[1].is_empty());
    }

    #[test]
    fn segmentation_entries_parse() {
        let data = "dogs\tdog s\ncats\tcat s\n";
        let e = read_segmentation_entries(data.as_bytes()).unwrap();
        assert_eq!(e.len(), 2);
        assert_eq!(e[0].0, "dogs");
        assert_eq!(e[0].1, vec!["dog", "s"]);
    }

    #[test]
    fn segmentation_requires_tab() {
        let data = "dogs dog s\n";
        assert!(read_segmentation_entries(data.as_bytes()).is_err());
    }

    #[test]
    fn prepared_words_carry_units_even_for_unk() {
        let toks: Vec<String> = ["aa", "aa", "aa", "aa", "aa", "bb"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let vocab = Vocabulary::build(toks.iter().map(|s| s.as_str()), 5).unwrap();
        let lexicon = SegmentationLexicon::char_mode(toks.iter().map(|s| s.as_str()));
        let words = prepare_source_words(
            &["bb".to_string(), "aa".to_string()],
            &vocab,
            &lexicon,
        )
        .unwrap();
        assert_eq!(words[0].id, UNK_ID);
        assert_eq!(words[0].units.len(), 2);
        assert_ne!(words[1].id, UNK_ID);
    }
}
