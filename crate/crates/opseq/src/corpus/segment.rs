use std::collections::{BTreeSet, HashMap};

use super::CorpusError;

pub type UnitId = u32;

/// Reserved unit used to pad short unit sequences for wide kernels.
pub const PAD_UNIT: UnitId = 0;
/// Reserved unit standing in for units outside the inventory.
pub const UNK_UNIT: UnitId = 1;

pub const PAD_UNIT_TOKEN: &str = "<pad>";
pub const UNK_UNIT_TOKEN: &str = "<u-unk>";

/// Whether words decompose into characters or morphemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitMode {
    Char,
    Morph,
}

impl UnitMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitMode::Char => "char",
            UnitMode::Morph => "morph",
        }
    }

    pub fn parse(s: &str) -> Result<UnitMode, CorpusError> {
        match s {
            "char" => Ok(UnitMode::Char),
            "morph" => Ok(UnitMode::Morph),
            _ => Err(CorpusError::Parse {
                line: 0,
                message: format!("unknown unit mode {s:?}"),
            }),
        }
    }
}

/// One segmented word: ordered unit ids plus a flag marking the whole-word
/// fallback used when a morpheme analysis is missing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub units: Vec<UnitId>,
    pub fallback: bool,
}

/// Sub-word unit inventory plus, in morpheme mode, the word-to-units map
/// taken from an external analyser's output.
#[derive(Debug, Clone)]
pub struct SegmentationLexicon {
    mode: UnitMode,
    id_to_unit: Vec<String>,
    unit_to_id: HashMap<String, UnitId>,
    word_units: HashMap<String, Vec<UnitId>>,
    word_order: Vec<String>,
}

impl SegmentationLexicon {
    /// Character mode: the unit inventory is the sorted set of characters
    /// appearing in the given words. Any word segments afterwards; unseen
    /// characters map to the reserved unknown unit.
    pub fn char_mode<'a, I>(words: I) -> SegmentationLexicon
    where
        I: IntoIterator<Item = &'a str>,
    {
        let chars: BTreeSet<char> = words.into_iter().flat_map(|w| w.chars()).collect();
        let mut lex = SegmentationLexicon::empty(UnitMode::Char);
        for ch in chars {
            lex.intern_unit(&ch.to_string());
        }
        lex
    }

    /// Morpheme mode from analyser output: one `(word, units)` entry per
    /// word, units of shape prefix* stem+ suffix*. The unit inventory is the
    /// sorted set of units in the entries.
    pub fn morph_mode(entries: &[(String, Vec<String>)]) -> Result<SegmentationLexicon, CorpusError> {
        let mut lex = SegmentationLexicon::empty(UnitMode::Morph);
        let units: BTreeSet<&str> = entries
            .iter()
            .flat_map(|(_, us)| us.iter().map(|u| u.as_str()))
            .collect();
        for u in units {
            lex.intern_unit(u);
        }
        for (word, parts) in entries {
            if word.is_empty() || parts.is_empty() || parts.iter().any(|p| p.is_empty()) {
                return Err(CorpusError::Parse {
                    line: 0,
                    message: format!("empty word or unit in segmentation entry for {word:?}"),
                });
            }
            let ids = parts.iter().map(|p| lex.unit_to_id[p.as_str()]).collect();
            if lex.word_units.insert(word.clone(), ids).is_none() {
                lex.word_order.push(word.clone());
            }
        }
        Ok(lex)
    }

    /// Rebuild from archived parts: the unit listing in id order (reserved
    /// units included) and the morpheme entries.
    pub fn from_parts(
        mode: UnitMode,
        units: Vec<String>,
        entries: &[(String, Vec<String>)],
    ) -> Result<SegmentationLexicon, CorpusError> {
        if units.len() < 2 || units[0] != PAD_UNIT_TOKEN || units[1] != UNK_UNIT_TOKEN {
            return Err(CorpusError::Contract(
                "unit listing must start with the reserved pad/unknown units".into(),
            ));
        }
        let mut lex = SegmentationLexicon::empty(mode);
        for u in units.iter().skip(2) {
            lex.intern_unit(u);
        }
        for (word, parts) in entries {
            let ids: Result<Vec<UnitId>, CorpusError> = parts
                .iter()
                .map(|p| {
                    lex.unit_to_id.get(p.as_str()).copied().ok_or_else(|| {
                        CorpusError::Contract(format!("segment {p:?} missing from unit listing"))
                    })
                })
                .collect();
            if lex.word_units.insert(word.clone(), ids?).is_none() {
                lex.word_order.push(word.clone());
            }
        }
        Ok(lex)
    }

    fn empty(mode: UnitMode) -> SegmentationLexicon {
        let mut lex = SegmentationLexicon {
            mode,
            id_to_unit: Vec::new(),
            unit_to_id: HashMap::new(),
            word_units: HashMap::new(),
            word_order: Vec::new(),
        };
        lex.id_to_unit.push(PAD_UNIT_TOKEN.to_string());
        lex.unit_to_id.insert(PAD_UNIT_TOKEN.to_string(), PAD_UNIT);
        lex.id_to_unit.push(UNK_UNIT_TOKEN.to_string());
        lex.unit_to_id.insert(UNK_UNIT_TOKEN.to_string(), UNK_UNIT);
        lex
    }

    fn intern_unit(&mut self, unit: &str) -> UnitId {
        if let Some(&id) = self.unit_to_id.get(unit) {
            return id;
        }
        let id = self.id_to_unit.len() as UnitId;
        self.id_to_unit.push(unit.to_string());
        self.unit_to_id.insert(unit.to_string(), id);
        id
    }

    pub fn mode(&self) -> UnitMode {
        self.mode
    }

    /// Unit inventory size, reserved units included.
    pub fn unit_count(&self) -> usize {
        self.id_to_unit.len()
    }

    pub fn unit(&self, id: UnitId) -> &str {
        &self.id_to_unit[id as usize]
    }

    pub fn units(&self) -> impl Iterator<Item = &str> {
        self.id_to_unit.iter().map(|s| s.as_str())
    }

    /// Morpheme entries in insertion order, for serialization.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &[UnitId])> {
        self.word_order
            .iter()
            .map(move |w| (w.as_str(), self.word_units[w].as_slice()))
    }

    pub fn has_word(&self, word: &str) -> bool {
        self.word_units.contains_key(word)
    }

    /// Segment a word into unit ids. Character mode splits into Unicode
    /// scalar values; morpheme mode looks the word up and falls back to a
    /// single whole-word unit (flagged) when no analysis exists.
    pub fn segment(&self, word: &str) -> Result<Segmentation, CorpusError> {
        if word.is_empty() {
            return Err(CorpusError::Argument("cannot segment an empty word".into()));
        }
        match self.mode {
            UnitMode::Char => {
                let units = word
                    .chars()
                    .map(|ch| {
                        self.unit_to_id
                            .get(ch.to_string().as_str())
                            .copied()
                            .unwrap_or(UNK_UNIT)
                    })
                    .collect();
                Ok(Segmentation {
                    units,
                    fallback: false,
                })
            }
            UnitMode::Morph => match self.word_units.get(word) {
                Some(units) => Ok(Segmentation {
                    units: units.clone(),
                    fallback: false,
                }),
                None => {
                    let unit = self.unit_to_id.get(word).copied().unwrap_or(UNK_UNIT);
                    Ok(Segmentation {
                        units: vec![unit],
                        fallback: true,
                    })
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_mode_splits_into_characters() {
        let lex = SegmentationLexicon::char_mode(["cat", "act"]);
        let seg = lex.segment("cat").unwrap();
        assert_eq!(seg.units.len(), 3);
        assert!(!seg.fallback);
        let joined: String = seg.units.iter().map(|&u| lex.unit(u)).collect();
        assert_eq!(joined, "cat");
    }

    #[test]
    fn morph_mode_uses_analyser_entries() {
        let entries = vec![(
            "täppidega".to_string(),
            vec!["täppi".to_string(), "de".to_string(), "ga".to_string()],
        )];
        let lex = SegmentationLexicon::morph_mode(&entries).unwrap();
        let seg = lex.segment("täppidega").unwrap();
        let units: Vec<&str> = seg.units.iter().map(|&u| lex.unit(u)).collect();
        assert_eq!(units, vec!["täppi", "de", "ga"]);
        assert!(!seg.fallback);
    }

    #[test]
    fn empty_word_is_an_argument_error() {
        let lex = SegmentationLexicon::char_mode(["ab"]);
        assert!(matches!(lex.segment(""), Err(CorpusError::Argument(_))));
    }

    #[test]
    fn morph_fallback_is_flagged() {
        let entries = vec![("dogs".to_string(), vec!["dog".to_string(), "s".to_string()])];
        let lex = SegmentationLexicon::morph_mode(&entries).unwrap();
        let seg = lex.segment("cats").unwrap();
        assert_eq!(seg.units, vec![UNK_UNIT]);
        assert!(seg.fallback);
        // fallback to the whole word when it is itself a known unit
        let seg = lex.segment("dog").unwrap();
        assert!(seg.fallback);
        assert_eq!(seg.units.len(), 1);
        assert_eq!(lex.unit(seg.units[0]), "dog");
    }

    #[test]
    fn unseen_characters_map_to_unknown_unit() {
        let lex = SegmentationLexicon::char_mode(["ab"]);
        let seg = lex.segment("axb").unwrap();
        assert_eq!(seg.units[1], UNK_UNIT);
    }

    #[test]
    fn char_concatenation_recovers_every_corpus_word() {
        let words = ["concatenation", "recovers", "every", "word", "täppidega"];
        let lex = SegmentationLexicon::char_mode(words);
        for w in words {
            let seg = lex.segment(w).unwrap();
            let joined: String = seg.units.iter().map(|&u| lex.unit(u)).collect();
            assert_eq!(joined, w);
        }
    }
}
