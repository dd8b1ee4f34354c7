use std::collections::{HashMap, HashSet};
use std::hash::Hash;

use super::EvalError;

/// Conditional translation probabilities estimated from alignment links by
/// relative frequency: `p(f|e)` and `p(e'|f)`, NULL links excluded. Words
/// with no links are absent from the tables.
#[derive(Debug, Clone, Default)]
pub struct TranslationTable {
    src_words: Vec<String>,
    src_index: HashMap<String, usize>,
    tgt_words: Vec<String>,
    tgt_index: HashMap<String, usize>,
    links_by_src: Vec<Vec<(usize, u64)>>,
    links_by_tgt: Vec<Vec<(usize, u64)>>,
    src_totals: Vec<u64>,
    tgt_totals: Vec<u64>,
}

impl TranslationTable {
    /// Estimate from aligned bitext given as token sentences plus the
    /// 1-based per-target-position alignment (0 = NULL).
    pub fn estimate<'a, I>(bitext: I) -> TranslationTable
    where
        I: IntoIterator<Item = (&'a [String], &'a [String], &'a [usize])>,
    {
        let mut table = TranslationTable::default();
        for (source, target, align) in bitext {
            for (j, &a) in align.iter().enumerate() {
                if a == 0 {
                    continue;
                }
                let e = &source[a - 1];
                let f = &target[j];
                let ei = intern(&mut table.src_words, &mut table.src_index, e);
                let fi = intern(&mut table.tgt_words, &mut table.tgt_index, f);
                if table.links_by_src.len() <= ei {
                    table.links_by_src.resize(ei + 1, Vec::new());
                    table.src_totals.resize(ei + 1, 0);
                }
                if table.links_by_tgt.len() <= fi {
                    table.links_by_tgt.resize(fi + 1, Vec::new());
                    table.tgt_totals.resize(fi + 1, 0);
                }
                bump(&mut table.links_by_src[ei], fi);
                bump(&mut table.links_by_tgt[fi], ei);
                table.src_totals[ei] += 1;
                table.tgt_totals[fi] += 1;
            }
        }
        table
    }

    pub fn covers_source(&self, e: &str) -> bool {
        self.src_index.contains_key(e)
    }

    /// `p(f|e)`; zero when the pair was never linked.
    pub fn p_target_given_source(&self, e: &str, f: &str) -> f64 {
        let (Some(&ei), Some(&fi)) = (self.src_index.get(e), self.tgt_index.get(f)) else {
            return 0.0;
        };
        let count = self.links_by_src[ei]
            .iter()
            .find(|(t, _)| *t == fi)
            .map(|(_, c)| *c)
            .unwrap_or(0);
        count as f64 / self.src_totals[ei] as f64
    }

    /// `p(e|f)`; zero when the pair was never linked.
    pub fn p_source_given_target(&self, f: &str, e: &str) -> f64 {
        let (Some(&ei), Some(&fi)) = (self.src_index.get(e), self.tgt_index.get(f)) else {
            return 0.0;
        };
        let count = self.links_by_tgt[fi]
            .iter()
            .find(|(s, _)| *s == ei)
            .map(|(_, c)| *c)
            .unwrap_or(0);
        count as f64 / self.tgt_totals[fi] as f64
    }

    /// The full pivoted distribution `p(e'|e) = sum_f p(f|e) p(e'|f)`, over
    /// every source word reachable through a shared target word. Includes
    /// `e' = e`; sums to one.
    pub fn pivot_scores(&self, e: &str) -> Option<Vec<(String, f64)>> {
        let &ei = self.src_index.get(e)?;
        let mut scores: HashMap<usize, f64> = HashMap::new();
        let e_total = self.src_totals[ei] as f64;
        for &(fi, c_ef) in &self.links_by_src[ei] {
            let p_f_given_e = c_ef as f64 / e_total;
            let f_total = self.tgt_totals[fi] as f64;
            for &(e2, c_e2f) in &self.links_by_tgt[fi] {
                *scores.entry(e2).or_insert(0.0) += p_f_given_e * c_e2f as f64 / f_total;
            }
        }
        let mut out: Vec<(usize, f64)> = scores.into_iter().collect();
        // deterministic order: score descending, then first-occurrence id
        out.sort_by(|(ia, sa), (ib, sb)| sb.partial_cmp(sa).unwrap().then(ia.cmp(ib)));
        Some(
            out.into_iter()
                .map(|(i, s)| (self.src_words[i].clone(), s))
                .collect(),
        )
    }

    /// Top candidates by pivoted probability, the query itself excluded.
    /// `None` when the query has no links.
    pub fn pivot_synonyms(&self, e: &str, top: usize) -> Option<Vec<(String, f64)>> {
        let scores = self.pivot_scores(e)?;
        Some(
            scores
                .into_iter()
                .filter(|(w, _)| w != e)
                .take(top)
                .collect(),
        )
    }
}

fn intern(words: &mut Vec<String>, index: &mut HashMap<String, usize>, w: &str) -> usize {
    if let Some(&i) = index.get(w) {
        return i;
    }
    let i = words.len();
    words.push(w.to_string());
    index.insert(w.to_string(), i);
    i
}

fn bump(links: &mut Vec<(usize, u64)>, key: usize) {
    for (k, c) in links.iter_mut() {
        if *k == key {
            *c += 1;
            return;
        }
    }
    links.push((key, 1));
}

/// Fraction of test words whose gold synonyms and predicted neighbours
/// overlap.
pub fn multilabel_accuracy<T: Eq + Hash>(
    items: &[(HashSet<T>, HashSet<T>)],
) -> Result<f64, EvalError> {
    if items.is_empty() {
        return Err(EvalError::Argument(
            "multilabel accuracy of an empty set".into(),
        ));
    }
    let hits = items
        .iter()
        .filter(|(gold, predicted)| gold.iter().any(|g| predicted.contains(g)))
        .count();
    Ok(hits as f64 / items.len() as f64)
}
