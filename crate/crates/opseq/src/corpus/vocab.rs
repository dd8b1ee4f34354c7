use std::collections::HashMap;

use super::CorpusError;

pub type TokenId = u32;

/// Reserved id shared by all out-of-vocabulary and sub-threshold tokens.
pub const UNK_ID: TokenId = 0;
/// Reserved id for the sentence-start symbol.
pub const START_ID: TokenId = 1;

pub const UNK_TOKEN: &str = "<unk>";
pub const START_TOKEN: &str = "<s>";

/// Token/id maps with training-frequency counts and an UNK threshold.
///
/// Ids are dense from zero with UNK and START reserved; tokens whose
/// training count is below the threshold never receive an id and resolve to
/// [`UNK_ID`] on lookup. Counts are retained for *every* token seen in
/// training, including sub-threshold ones, for frequency-band analysis.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    id_to_token: Vec<String>,
    token_to_id: HashMap<String, TokenId>,
    counts: HashMap<String, u64>,
    rare_order: Vec<String>,
    threshold: u64,
}

impl Vocabulary {
    /// Count the token stream and assign ids to tokens meeting the
    /// threshold, in first-appearance order. The literal reserved spellings
    /// map to their reserved ids.
    pub fn build<'a, I>(tokens: I, threshold: u64) -> Result<Vocabulary, CorpusError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut counts: HashMap<String, u64> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        let mut seen_any = false;
        for tok in tokens {
            seen_any = true;
            match counts.get_mut(tok) {
                Some(c) => *c += 1,
                None => {
                    counts.insert(tok.to_string(), 1);
                    order.push(tok.to_string());
                }
            }
        }
        if !seen_any {
            return Err(CorpusError::EmptyCorpus);
        }

        let mut vocab = Vocabulary {
            id_to_token: vec![UNK_TOKEN.to_string(), START_TOKEN.to_string()],
            token_to_id: HashMap::new(),
            counts,
            rare_order: Vec::new(),
            threshold,
        };
        vocab.token_to_id.insert(UNK_TOKEN.to_string(), UNK_ID);
        vocab.token_to_id.insert(START_TOKEN.to_string(), START_ID);
        for tok in order {
            if tok == UNK_TOKEN || tok == START_TOKEN {
                continue;
            }
            if vocab.counts[&tok] >= threshold {
                let id = vocab.id_to_token.len() as TokenId;
                vocab.token_to_id.insert(tok.clone(), id);
                vocab.id_to_token.push(tok);
            } else {
                vocab.rare_order.push(tok);
            }
        }
        Ok(vocab)
    }

    /// Rebuild from serialized entries: `(id, token, count)` with `None` ids
    /// for sub-threshold tokens. In-vocabulary entries must appear in dense
    /// id order starting after the reserved ids.
    pub fn from_entries(
        threshold: u64,
        entries: Vec<(Option<TokenId>, String, u64)>,
    ) -> Result<Vocabulary, CorpusError> {
        let mut vocab = Vocabulary {
            id_to_token: vec![UNK_TOKEN.to_string(), START_TOKEN.to_string()],
            token_to_id: HashMap::new(),
            counts: HashMap::new(),
            rare_order: Vec::new(),
            threshold,
        };
        vocab.token_to_id.insert(UNK_TOKEN.to_string(), UNK_ID);
        vocab.token_to_id.insert(START_TOKEN.to_string(), START_ID);
        for (id, token, count) in entries {
            if token == UNK_TOKEN || token == START_TOKEN {
                continue;
            }
            vocab.counts.insert(token.clone(), count);
            match id {
                Some(id) => {
                    if id as usize != vocab.id_to_token.len() {
                        return Err(CorpusError::Contract(format!(
                            "vocabulary id {id} out of order for token {token:?}"
                        )));
                    }
                    vocab.token_to_id.insert(token.clone(), id);
                    vocab.id_to_token.push(token);
                }
                None => vocab.rare_order.push(token),
            }
        }
        Ok(vocab)
    }

    /// Lookup never fails: unseen and sub-threshold tokens map to UNK.
    pub fn lookup(&self, token: &str) -> TokenId {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn in_vocab(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: TokenId) -> &str {
        &self.id_to_token[id as usize]
    }

    /// Number of ids, reserved symbols included.
    pub fn size(&self) -> usize {
        self.id_to_token.len()
    }

    /// Training frequency of a token; zero when never seen.
    pub fn count(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// In-vocabulary tokens in id order, reserved symbols excluded.
    pub fn id_tokens(&self) -> impl Iterator<Item = &str> {
        self.id_to_token.iter().skip(2).map(|s| s.as_str())
    }

    /// Sub-threshold tokens, sorted for a canonical listing order.
    pub fn rare_tokens_sorted(&self) -> Vec<&str> {
        let mut rare: Vec<&str> = self.rare_order.iter().map(|s| s.as_str()).collect();
        rare.sort_unstable();
        rare
    }

    /// The full training lexicon: in-vocabulary types in id order followed by
    /// sub-threshold types in sorted order. This is the canonical order used
    /// for neighbour tie-breaking.
    pub fn training_lexicon(&self) -> Vec<&str> {
        let mut all: Vec<&str> = self.id_tokens().collect();
        all.extend(self.rare_tokens_sorted());
        all
    }
}

/// Frequency band of a training count, as used in the intrinsic reports.
/// Bucket edges are inclusive; `[0-4]` is the OOV band under threshold 5 and
/// `50+` means a count of 51 or more.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrequencyBand {
    B0to4,
    B5to9,
    B10to14,
    B15to19,
    B20to50,
    Over50,
}

pub const ALL_BANDS: [FrequencyBand; 6] = [
    FrequencyBand::B0to4,
    FrequencyBand::B5to9,
    FrequencyBand::B10to14,
    FrequencyBand::B15to19,
    FrequencyBand::B20to50,
    FrequencyBand::Over50,
];

pub fn frequency_band(count: u64) -> FrequencyBand {
    match count {
        0..=4 => FrequencyBand::B0to4,
        5..=9 => FrequencyBand::B5to9,
        10..=14 => FrequencyBand::B10to14,
        15..=19 => FrequencyBand::B15to19,
        20..=50 => FrequencyBand::B20to50,
        _ => FrequencyBand::Over50,
    }
}

impl std::fmt::Display for FrequencyBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FrequencyBand::B0to4 => "[0-4]",
            FrequencyBand::B5to9 => "[5-9]",
            FrequencyBand::B10to14 => "[10-14]",
            FrequencyBand::B15to19 => "[15-19]",
            FrequencyBand::B20to50 => "[20-50]",
            FrequencyBand::Over50 => "50+",
        };
        f.write_str(s)
    }
}
