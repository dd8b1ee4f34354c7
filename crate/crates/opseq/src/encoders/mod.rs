//! Source-word representation architectures: plain word embeddings, bag of
//! sub-word units, bidirectional LSTM over units, and a character/morph
//! convolution with highway layers — all combined with the word embedding by
//! an elementwise max.

use std::collections::HashMap;

use crate::corpus::{SourceWord, UnitId, UnitMode, PAD_UNIT, UNK_ID};
use crate::numkit::{Array, Graph, LstmGates, NodeRef, NumError, ParamId, ParamSet, Rng};

/// Which composition architecture produces the sub-word encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Word,
    Bag,
    Bilstm,
    Cnn,
}

impl EncoderKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EncoderKind::Word => "word",
            EncoderKind::Bag => "bag",
            EncoderKind::Bilstm => "bilstm",
            EncoderKind::Cnn => "cnn",
        }
    }

    pub fn parse(s: &str) -> Result<EncoderKind, NumError> {
        match s {
            "word" => Ok(EncoderKind::Word),
            "bag" => Ok(EncoderKind::Bag),
            "bilstm" => Ok(EncoderKind::Bilstm),
            "cnn" => Ok(EncoderKind::Cnn),
            _ => Err(NumError::Argument(format!("unknown encoder kind {s:?}"))),
        }
    }

    /// Whether the encoder composes representations from sub-word units.
    pub fn uses_units(&self) -> bool {
        !matches!(self, EncoderKind::Word)
    }
}

/// A convolution kernel group: `filters` kernels of the given width.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelSpec {
    pub width: usize,
    pub filters: usize,
}

/// Hyperparameters of a source-word encoder.
#[derive(Debug, Clone)]
pub struct EncoderConfig {
    pub kind: EncoderKind,
    pub unit_mode: UnitMode,
    /// Word-embedding and combined-representation dimension.
    pub word_dim: usize,
    /// Unit-embedding dimension. Bag mode ties this to `word_dim` so the sum
    /// lives in the combine space.
    pub unit_dim: usize,
    pub lstm_hidden: usize,
    pub kernels: Vec<KernelSpec>,
    pub highway_layers: usize,
}

impl EncoderConfig {
    /// Defaults for a kind: word/combined dimension 64, unit dimension 16
    /// (except bag, which ties it to 64), LSTM hidden size 64, kernel widths
    /// 1-5 with filter counts summing to the word dimension, one highway
    /// layer.
    pub fn new(kind: EncoderKind, unit_mode: UnitMode) -> EncoderConfig {
        let word_dim = 64;
        EncoderConfig {
            kind,
            unit_mode,
            word_dim,
            unit_dim: if kind == EncoderKind::Bag { word_dim } else { 16 },
            lstm_hidden: 64,
            kernels: default_kernels(word_dim, 5),
            highway_layers: 1,
        }
    }

    pub fn validate(&self) -> Result<(), NumError> {
        if self.word_dim == 0 || self.unit_dim == 0 {
            return Err(NumError::Argument("encoder dimensions must be positive".into()));
        }
        match self.kind {
            EncoderKind::Bag if self.unit_dim != self.word_dim => Err(NumError::Argument(format!(
                "bag encoding sums unit embeddings into the combine space, so unit_dim ({}) must equal word_dim ({})",
                self.unit_dim, self.word_dim
            ))),
            EncoderKind::Bilstm if self.lstm_hidden == 0 => {
                Err(NumError::Argument("lstm_hidden must be positive".into()))
            }
            EncoderKind::Cnn => {
                if self.kernels.is_empty() {
                    return Err(NumError::Argument("cnn needs at least one kernel width".into()));
                }
                if self.kernels.iter().any(|k| k.width == 0 || k.filters == 0) {
                    return Err(NumError::Argument("kernel widths and filter counts must be positive".into()));
                }
                let total: usize = self.kernels.iter().map(|k| k.filters).sum();
                if total != self.word_dim {
                    return Err(NumError::Argument(format!(
                        "cnn filter counts must sum to word_dim ({}), got {total}",
                        self.word_dim
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn max_kernel_width(&self) -> usize {
        self.kernels.iter().map(|k| k.width).max().unwrap_or(1)
    }
}

/// Kernel widths `1..=max_width` with filter counts summing to `total`,
/// split as evenly as possible with the remainder on the widest kernel.
pub fn default_kernels(total: usize, max_width: usize) -> Vec<KernelSpec> {
    let widths = max_width.min(total).max(1);
    let base = total / widths;
    let remainder = total - base * widths;
    (1..=widths)
        .map(|width| KernelSpec {
            width,
            filters: if width == widths { base + remainder } else { base },
        })
        .collect()
}

struct LstmParamIds {
    w_input: ParamId,
    b_input: ParamId,
    w_forget: ParamId,
    b_forget: ParamId,
    w_cell: ParamId,
    b_cell: ParamId,
    w_output: ParamId,
    b_output: ParamId,
}

impl LstmParamIds {
    fn init(
        params: &mut ParamSet,
        prefix: &str,
        hidden: usize,
        input: usize,
        rng: &mut Rng,
    ) -> Result<LstmParamIds, NumError> {
        let w = |params: &mut ParamSet, rng: &mut Rng, name: &str| {
            params.add_uniform(&format!("{prefix}.{name}"), &[hidden, hidden + input], rng)
        };
        let b = |params: &mut ParamSet, name: &str| {
            params.add_zeros(&format!("{prefix}.{name}"), &[hidden])
        };
        Ok(LstmParamIds {
            w_input: w(params, rng, "w_input")?,
            b_input: b(params, "b_input")?,
            w_forget: w(params, rng, "w_forget")?,
            b_forget: b(params, "b_forget")?,
            w_cell: w(params, rng, "w_cell")?,
            b_cell: b(params, "b_cell")?,
            w_output: w(params, rng, "w_output")?,
            b_output: b(params, "b_output")?,
        })
    }

    fn resolve(params: &ParamSet, prefix: &str) -> Result<LstmParamIds, NumError> {
        let id = |name: &str| {
            params
                .id(&format!("{prefix}.{name}"))
                .ok_or_else(|| NumError::Argument(format!("missing parameter {prefix}.{name}")))
        };
        Ok(LstmParamIds {
            w_input: id("w_input")?,
            b_input: id("b_input")?,
            w_forget: id("w_forget")?,
            b_forget: id("b_forget")?,
            w_cell: id("w_cell")?,
            b_cell: id("b_cell")?,
            w_output: id("w_output")?,
            b_output: id("b_output")?,
        })
    }

    fn gates(&self, g: &mut Graph, params: &ParamSet) -> LstmGates {
        LstmGates {
            w_input: g.param(params, self.w_input),
            b_input: g.param(params, self.b_input),
            w_forget: g.param(params, self.w_forget),
            b_forget: g.param(params, self.b_forget),
            w_cell: g.param(params, self.w_cell),
            b_cell: g.param(params, self.b_cell),
            w_output: g.param(params, self.w_output),
            b_output: g.param(params, self.b_output),
        }
    }
}

struct HighwayIds {
    w_transform: ParamId,
    b_transform: ParamId,
    w_gate: ParamId,
    b_gate: ParamId,
}

/// Parameter handles of one encoder, created in a fixed order so that
/// initialization draws and archive layout are reproducible.
pub struct EncoderParams {
    /// Word embedding table `[V_S, word_dim]`; row 0 is the shared UNK row.
    pub word_emb: ParamId,
    /// Unit embedding table `[unit_count, unit_dim]`; rows 0/1 are the
    /// padding and unknown units.
    pub unit_emb: Option<ParamId>,
    lstm_fwd: Option<LstmParamIds>,
    lstm_bwd: Option<LstmParamIds>,
    lstm_mlp_w: Option<ParamId>,
    lstm_mlp_b: Option<ParamId>,
    /// Per kernel group: `[filters, unit_dim * width]` kernels and
    /// `[filters]` biases.
    kernel_params: Vec<(ParamId, ParamId)>,
    highway: Vec<HighwayIds>,
    /// Learned encoding of the NULL action (row 0 of the sentence matrix).
    pub null_row: ParamId,
    /// Learned encoding of the FINISH action (last row).
    pub finish_row: ParamId,
}

impl EncoderParams {
    pub fn init(
        params: &mut ParamSet,
        cfg: &EncoderConfig,
        source_vocab_size: usize,
        unit_count: usize,
        rng: &mut Rng,
    ) -> Result<EncoderParams, NumError> {
        cfg.validate()?;
        let word_emb = params.add_uniform("src.word_emb", &[source_vocab_size, cfg.word_dim], rng)?;
        let unit_emb = if cfg.kind.uses_units() {
            Some(params.add_uniform("src.unit_emb", &[unit_count, cfg.unit_dim], rng)?)
        } else {
            None
        };
        let (lstm_fwd, lstm_bwd, lstm_mlp_w, lstm_mlp_b) = if cfg.kind == EncoderKind::Bilstm {
            let fwd = LstmParamIds::init(params, "enc.lstm_fwd", cfg.lstm_hidden, cfg.unit_dim, rng)?;
            let bwd = LstmParamIds::init(params, "enc.lstm_bwd", cfg.lstm_hidden, cfg.unit_dim, rng)?;
            let w = params.add_uniform("enc.lstm_mlp_w", &[cfg.word_dim, 2 * cfg.lstm_hidden], rng)?;
            let b = params.add_zeros("enc.lstm_mlp_b", &[cfg.word_dim])?;
            (Some(fwd), Some(bwd), Some(w), Some(b))
        } else {
            (None, None, None, None)
        };
        let mut kernel_params = Vec::new();
        let mut highway = Vec::new();
        if cfg.kind == EncoderKind::Cnn {
            for spec in &cfg.kernels {
                let w = params.add_uniform(
                    &format!("enc.cnn.k{}_w", spec.width),
                    &[spec.filters, cfg.unit_dim * spec.width],
                    rng,
                )?;
                let b = params.add_zeros(&format!("enc.cnn.k{}_b", spec.width), &[spec.filters])?;
                kernel_params.push((w, b));
            }
            for layer in 0..cfg.highway_layers {
                highway.push(HighwayIds {
                    w_transform: params.add_uniform(
                        &format!("enc.hw{layer}.w_transform"),
                        &[cfg.word_dim, cfg.word_dim],
                        rng,
                    )?,
                    b_transform: params.add_zeros(&format!("enc.hw{layer}.b_transform"), &[cfg.word_dim])?,
                    w_gate: params.add_uniform(
                        &format!("enc.hw{layer}.w_gate"),
                        &[cfg.word_dim, cfg.word_dim],
                        rng,
                    )?,
                    b_gate: params.add_zeros(&format!("enc.hw{layer}.b_gate"), &[cfg.word_dim])?,
                });
            }
        }
        let null_row = params.add_uniform("enc.null_row", &[cfg.word_dim], rng)?;
        let finish_row = params.add_uniform("enc.finish_row", &[cfg.word_dim], rng)?;
        Ok(EncoderParams {
            word_emb,
            unit_emb,
            lstm_fwd,
            lstm_bwd,
            lstm_mlp_w,
            lstm_mlp_b,
            kernel_params,
            highway,
            null_row,
            finish_row,
        })
    }

    /// Re-derive the handles from parameter names after loading an archive.
    pub fn resolve(params: &ParamSet, cfg: &EncoderConfig) -> Result<EncoderParams, NumError> {
        cfg.validate()?;
        let id = |name: &str| {
            params
                .id(name)
                .ok_or_else(|| NumError::Argument(format!("missing parameter {name}")))
        };
        let word_emb = id("src.word_emb")?;
        let unit_emb = if cfg.kind.uses_units() {
            Some(id("src.unit_emb")?)
        } else {
            None
        };
        let (lstm_fwd, lstm_bwd, lstm_mlp_w, lstm_mlp_b) = if cfg.kind == EncoderKind::Bilstm {
            (
                Some(LstmParamIds::resolve(params, "enc.lstm_fwd")?),
                Some(LstmParamIds::resolve(params, "enc.lstm_bwd")?),
                Some(id("enc.lstm_mlp_w")?),
                Some(id("enc.lstm_mlp_b")?),
            )
        } else {
            (None, None, None, None)
        };
        let mut kernel_params = Vec::new();
        let mut highway = Vec::new();
        if cfg.kind == EncoderKind::Cnn {
            for spec in &cfg.kernels {
                kernel_params.push((
                    id(&format!("enc.cnn.k{}_w", spec.width))?,
                    id(&format!("enc.cnn.k{}_b", spec.width))?,
                ));
            }
            for layer in 0..cfg.highway_layers {
                highway.push(HighwayIds {
                    w_transform: id(&format!("enc.hw{layer}.w_transform"))?,
                    b_transform: id(&format!("enc.hw{layer}.b_transform"))?,
                    w_gate: id(&format!("enc.hw{layer}.w_gate"))?,
                    b_gate: id(&format!("enc.hw{layer}.b_gate"))?,
                });
            }
        }
        Ok(EncoderParams {
            word_emb,
            unit_emb,
            lstm_fwd,
            lstm_bwd,
            lstm_mlp_w,
            lstm_mlp_b,
            kernel_params,
            highway,
            null_row: id("enc.null_row")?,
            finish_row: id("enc.finish_row")?,
        })
    }

    fn unit_emb(&self) -> Result<ParamId, NumError> {
        self.unit_emb
            .ok_or_else(|| NumError::Contract("encoder has no unit embeddings".into()))
    }
}

/// A combined word representation node plus provenance flags.
pub struct WordRepr {
    pub node: NodeRef,
    /// The word embedding used was the shared UNK row.
    pub used_unk_row: bool,
    /// The unit sequence came from the whole-word fallback.
    pub used_fallback: bool,
}

/// The encoded source sentence: the per-row nodes (NULL, words, FINISH) and
/// the stacked `[|s| + 2, word_dim]` matrix.
pub struct SentenceEncoding {
    pub rows: Vec<NodeRef>,
    pub matrix: NodeRef,
}

fn unit_nodes(
    g: &mut Graph,
    params: &ParamSet,
    table: ParamId,
    units: &[UnitId],
) -> Result<Vec<NodeRef>, NumError> {
    if units.is_empty() {
        return Err(NumError::Argument("cannot encode an empty unit list".into()));
    }
    Ok(units
        .iter()
        .map(|&u| g.param_row(params, table, u as usize))
        .collect())
}

/// Bag encoding: the unit embeddings summed.
pub fn encode_bag(
    g: &mut Graph,
    params: &ParamSet,
    enc: &EncoderParams,
    units: &[UnitId],
) -> Result<NodeRef, NumError> {
    let nodes = unit_nodes(g, params, enc.unit_emb()?, units)?;
    g.sum_n(&nodes)
}

/// Bi-LSTM encoding: the final forward state and final backward state fed to
/// a tanh MLP.
pub fn encode_bilstm(
    g: &mut Graph,
    params: &ParamSet,
    cfg: &EncoderConfig,
    enc: &EncoderParams,
    units: &[UnitId],
) -> Result<NodeRef, NumError> {
    let inputs = unit_nodes(g, params, enc.unit_emb()?, units)?;
    let fwd = enc
        .lstm_fwd
        .as_ref()
        .ok_or_else(|| NumError::Contract("bilstm parameters missing".into()))?
        .gates(g, params);
    let bwd = enc
        .lstm_bwd
        .as_ref()
        .ok_or_else(|| NumError::Contract("bilstm parameters missing".into()))?
        .gates(g, params);

    let zero = Array::vector(vec![0.0; cfg.lstm_hidden]);
    let run = |g: &mut Graph, gates: &LstmGates, seq: &[NodeRef]| -> Result<NodeRef, NumError> {
        let mut h = g.constant(zero.clone());
        let mut c = g.constant(zero.clone());
        for &x in seq {
            let (h2, c2) = g.lstm_step(h, c, x, gates)?;
            h = h2;
            c = c2;
        }
        Ok(h)
    };
    let h_fwd = run(g, &fwd, &inputs)?;
    let reversed: Vec<NodeRef> = inputs.iter().rev().copied().collect();
    let h_bwd = run(g, &bwd, &reversed)?;
    let w = g.param(params, enc.lstm_mlp_w.unwrap());
    let b = g.param(params, enc.lstm_mlp_b.unwrap());
    g.mlp_tanh(&[h_fwd, h_bwd], w, b)
}

/// Stack unit embeddings as the columns of the `[unit_dim, n]` input matrix,
/// padding both ends with the learned padding unit until the widest kernel
/// fits.
fn unit_matrix(
    g: &mut Graph,
    params: &ParamSet,
    cfg: &EncoderConfig,
    enc: &EncoderParams,
    units: &[UnitId],
) -> Result<NodeRef, NumError> {
    if units.is_empty() {
        return Err(NumError::Argument("cannot encode an empty unit list".into()));
    }
    let min_len = cfg.max_kernel_width();
    let mut padded: Vec<UnitId> = units.to_vec();
    if padded.len() < min_len {
        let missing = min_len - padded.len();
        let left = missing / 2;
        let mut full = vec![PAD_UNIT; left];
        full.extend_from_slice(&padded);
        full.extend(std::iter::repeat_n(PAD_UNIT, missing - left));
        padded = full;
    }
    let table = enc.unit_emb()?;
    let cols = unit_nodes(g, params, table, &padded)?;
    g.cols_to_matrix(&cols)
}

/// Convolutional encoding: per-kernel feature maps max-pooled into the
/// combine space, then highway layers.
pub fn encode_cnn(
    g: &mut Graph,
    params: &ParamSet,
    cfg: &EncoderConfig,
    enc: &EncoderParams,
    units: &[UnitId],
) -> Result<NodeRef, NumError> {
    let input = unit_matrix(g, params, cfg, enc, units)?;
    let mut pooled = Vec::with_capacity(cfg.word_dim);
    for (spec, (w_id, b_id)) in cfg.kernels.iter().zip(&enc.kernel_params) {
        for f in 0..spec.filters {
            let kernel = g.param_row(params, *w_id, f);
            let bias_vec = g.param(params, *b_id);
            let bias = g.pick(bias_vec, f)?;
            let map = g.conv_map(input, kernel, bias, spec.width)?;
            pooled.push(g.max_all(map)?);
        }
    }
    let mut x = g.concat(&pooled)?;
    for hw in &enc.highway {
        let w_t = g.param(params, hw.w_transform);
        let b_t = g.param(params, hw.b_transform);
        let w_g = g.param(params, hw.w_gate);
        let b_g = g.param(params, hw.b_gate);
        let transformed = g.mlp_tanh(&[x], w_t, b_t)?;
        let gate_pre = g.affine(x, w_g, b_g)?;
        let gate = g.sigmoid(gate_pre);
        let carry = g.one_minus(gate);
        let a = g.mul(gate, transformed)?;
        let b = g.mul(carry, x)?;
        x = g.add(a, b)?;
    }
    Ok(x)
}

/// The combined representation `r_w`: the word embedding alone for the word
/// kind, otherwise the elementwise max of the word embedding and the
/// sub-word encoding.
pub fn represent_word(
    g: &mut Graph,
    params: &ParamSet,
    cfg: &EncoderConfig,
    enc: &EncoderParams,
    word: &SourceWord,
) -> Result<WordRepr, NumError> {
    let m_w = g.param_row(params, enc.word_emb, word.id as usize);
    let node = match cfg.kind {
        EncoderKind::Word => m_w,
        EncoderKind::Bag => {
            let e_w = encode_bag(g, params, enc, &word.units)?;
            g.max_pair(m_w, e_w)?
        }
        EncoderKind::Bilstm => {
            let e_w = encode_bilstm(g, params, cfg, enc, &word.units)?;
            g.max_pair(m_w, e_w)?
        }
        EncoderKind::Cnn => {
            let e_w = encode_cnn(g, params, cfg, enc, &word.units)?;
            g.max_pair(m_w, e_w)?
        }
    };
    Ok(WordRepr {
        node,
        used_unk_row: word.id == UNK_ID,
        used_fallback: word.fallback,
    })
}

/// Encode a source sentence as the `[|s| + 2, word_dim]` matrix whose first
/// and last rows are the learned NULL and FINISH encodings. Repeated tokens
/// share one representation node.
pub fn represent_source_sentence(
    g: &mut Graph,
    params: &ParamSet,
    cfg: &EncoderConfig,
    enc: &EncoderParams,
    words: &[SourceWord],
) -> Result<SentenceEncoding, NumError> {
    let mut rows = Vec::with_capacity(words.len() + 2);
    rows.push(g.param(params, enc.null_row));
    let mut cache: HashMap<(u32, &[UnitId]), NodeRef> = HashMap::new();
    for word in words {
        let key = (word.id, word.units.as_slice());
        let node = match cache.get(&key) {
            Some(&n) => n,
            None => {
                let repr = represent_word(g, params, cfg, enc, word)?;
                cache.insert(key, repr.node);
                repr.node
            }
        };
        rows.push(node);
    }
    rows.push(g.param(params, enc.finish_row));
    let matrix = g.rows_to_matrix(&rows)?;
    Ok(SentenceEncoding { rows, matrix })
}
