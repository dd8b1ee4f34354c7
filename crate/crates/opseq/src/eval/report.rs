use crate::corpus::{frequency_band, FrequencyBand, ALL_BANDS};

/// One band's aggregate: the mean metric over measured words, or the marker
/// that the model cannot represent any word in the band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandCell {
    Value { mean: f64, measured: usize },
    NotRepresentable,
}

/// Per-frequency-band means of one metric. Bands with no test words are
/// absent rather than zero.
#[derive(Debug, Clone)]
pub struct BandReport {
    pub metric: String,
    pub rows: Vec<(FrequencyBand, BandCell)>,
}

/// Aggregate per-word metric values into band means. Each item is the
/// word's training count plus its metric value, `None` marking a word the
/// model cannot represent. A band whose words are all unrepresentable
/// renders as `-`; a band with measured words averages over them.
pub fn band_report(metric: &str, items: &[(u64, Option<f64>)]) -> BandReport {
    let mut rows = Vec::new();
    for band in ALL_BANDS {
        let in_band: Vec<&Option<f64>> = items
            .iter()
            .filter(|(count, _)| frequency_band(*count) == band)
            .map(|(_, v)| v)
            .collect();
        if in_band.is_empty() {
            continue;
        }
        let measured: Vec<f64> = in_band.iter().filter_map(|v| **v).collect();
        let cell = if measured.is_empty() {
            BandCell::NotRepresentable
        } else {
            BandCell::Value {
                mean: measured.iter().sum::<f64>() / measured.len() as f64,
                measured: measured.len(),
            }
        };
        rows.push((band, cell));
    }
    BandReport {
        metric: metric.to_string(),
        rows,
    }
}

impl BandReport {
    /// Aligned plain-text table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{:<10} {:>10} {:>8}\n", "band", self.metric, "n"));
        for (band, cell) in &self.rows {
            match cell {
                BandCell::Value { mean, measured } => {
                    out.push_str(&format!("{:<10} {:>10.4} {:>8}\n", band.to_string(), mean, measured));
                }
                BandCell::NotRepresentable => {
                    out.push_str(&format!("{:<10} {:>10} {:>8}\n", band.to_string(), "-", 0));
                }
            }
        }
        out
    }

    /// Tab-separated machine-readable rows: `band<TAB>value<TAB>n`.
    pub fn render_tsv(&self) -> String {
        let mut out = String::from("band\tvalue\tn\n");
        for (band, cell) in &self.rows {
            match cell {
                BandCell::Value { mean, measured } => {
                    out.push_str(&format!("{band}\t{mean:.6}\t{measured}\n"));
                }
                BandCell::NotRepresentable => {
                    out.push_str(&format!("{band}\t-\t0\n"));
                }
            }
        }
        out
    }
}
