//! Independent re-computation of sequence scores: a plain-`f64`,
//! graph-free reimplementation of the encoders and the decision recurrence,
//! checked against the model's scoring path at random initialization.

use opseq::corpus::{
    extract_operations, PreparedPair, SegmentationLexicon, SourceWord, UnitMode, Vocabulary,
    NULL_POS, PAD_UNIT, START_ID,
};
use opseq::encoders::{EncoderConfig, EncoderKind, KernelSpec};
use opseq::numkit::ParamSet;
use opseq::osm::{ModelConfig, OsmModel};

fn rows_of(params: &ParamSet, name: &str) -> (Vec<f64>, usize, usize) {
    let id = params.id(name).unwrap_or_else(|| panic!("missing {name}"));
    let v = params.value(id);
    if v.shape().len() == 2 {
        (v.data().to_vec(), v.shape()[0], v.shape()[1])
    } else {
        (v.data().to_vec(), 1, v.shape()[0])
    }
}

fn vec_of(params: &ParamSet, name: &str) -> Vec<f64> {
    rows_of(params, name).0
}

fn row(table: &(Vec<f64>, usize, usize), r: usize) -> &[f64] {
    let (data, _rows, cols) = table;
    &data[r * cols..(r + 1) * cols]
}

fn matvec(m: &(Vec<f64>, usize, usize), x: &[f64]) -> Vec<f64> {
    let (data, rows, cols) = m;
    assert_eq!(*cols, x.len());
    (0..*rows)
        .map(|r| {
            data[r * cols..(r + 1) * cols]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn tanh_v(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| x.tanh()).collect()
}

fn sigmoid_v(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect()
}

fn log_softmax_masked(logits: &[f64], mask: Option<usize>) -> Vec<f64> {
    let max = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| mask != Some(*i))
        .map(|(_, &v)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits
        .iter()
        .enumerate()
        .filter(|(i, _)| mask != Some(*i))
        .map(|(_, &v)| (v - max).exp())
        .sum();
    let lse = max + sum.ln();
    logits
        .iter()
        .enumerate()
        .map(|(i, &v)| if mask == Some(i) { f64::NEG_INFINITY } else { v - lse })
        .collect()
}

struct NaiveLstm {
    w_i: (Vec<f64>, usize, usize),
    b_i: Vec<f64>,
    w_f: (Vec<f64>, usize, usize),
    b_f: Vec<f64>,
    w_c: (Vec<f64>, usize, usize),
    b_c: Vec<f64>,
    w_o: (Vec<f64>, usize, usize),
    b_o: Vec<f64>,
}

impl NaiveLstm {
    fn load(params: &ParamSet, prefix: &str) -> NaiveLstm {
        NaiveLstm {
            w_i: rows_of(params, &format!("{prefix}.w_input")),
            b_i: vec_of(params, &format!("{prefix}.b_input")),
            w_f: rows_of(params, &format!("{prefix}.w_forget")),
            b_f: vec_of(params, &format!("{prefix}.b_forget")),
            w_c: rows_of(params, &format!("{prefix}.w_cell")),
            b_c: vec_of(params, &format!("{prefix}.b_cell")),
            w_o: rows_of(params, &format!("{prefix}.w_output")),
            b_o: vec_of(params, &format!("{prefix}.b_output")),
        }
    }

    fn run(&self, inputs: &[&[f64]], hidden: usize) -> Vec<f64> {
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        for x in inputs {
            let hx: Vec<f64> = h.iter().chain(x.iter()).copied().collect();
            let i = sigmoid_v(&add(&matvec(&self.w_i, &hx), &self.b_i));
            let f = sigmoid_v(&add(&matvec(&self.w_f, &hx), &self.b_f));
            let g = tanh_v(&add(&matvec(&self.w_c, &hx), &self.b_c));
            let o = sigmoid_v(&add(&matvec(&self.w_o, &hx), &self.b_o));
            c = (0..hidden).map(|k| f[k] * c[k] + i[k] * g[k]).collect();
            h = (0..hidden).map(|k| o[k] * c[k].tanh()).collect();
        }
        h
    }
}

/// Graph-free word encoding under any encoder kind.
fn naive_encode(model: &OsmModel, word: &SourceWord) -> Vec<f64> {
    let params = &model.params;
    let cfg = &model.spec.config.encoder;
    let word_emb = rows_of(params, "src.word_emb");
    let m_w = row(&word_emb, word.id as usize).to_vec();
    if cfg.kind == EncoderKind::Word {
        return m_w;
    }
    let unit_emb = rows_of(params, "src.unit_emb");
    let e_w: Vec<f64> = match cfg.kind {
        EncoderKind::Word => unreachable!(),
        EncoderKind::Bag => {
            let mut acc = vec![0.0; cfg.unit_dim];
            for &u in &word.units {
                for (a, v) in acc.iter_mut().zip(row(&unit_emb, u as usize)) {
                    *a += v;
                }
            }
            acc
        }
        EncoderKind::Bilstm => {
            let fwd = NaiveLstm::load(params, "enc.lstm_fwd");
            let bwd = NaiveLstm::load(params, "enc.lstm_bwd");
            let inputs: Vec<&[f64]> = word.units.iter().map(|&u| row(&unit_emb, u as usize)).collect();
            let rev: Vec<&[f64]> = inputs.iter().rev().copied().collect();
            let h_f = fwd.run(&inputs, cfg.lstm_hidden);
            let h_b = bwd.run(&rev, cfg.lstm_hidden);
            let concat: Vec<f64> = h_f.into_iter().chain(h_b).collect();
            let w = rows_of(params, "enc.lstm_mlp_w");
            let b = vec_of(params, "enc.lstm_mlp_b");
            tanh_v(&add(&matvec(&w, &concat), &b))
        }
        EncoderKind::Cnn => {
            // pad both ends until the widest kernel fits
            let max_w = cfg.kernels.iter().map(|k| k.width).max().unwrap();
            let mut units = word.units.clone();
            if units.len() < max_w {
                let missing = max_w - units.len();
                let left = missing / 2;
                let mut padded = vec![PAD_UNIT; left];
                padded.extend_from_slice(&units);
                padded.extend(std::iter::repeat_n(PAD_UNIT, missing - left));
                units = padded;
            }
            let n = units.len();
            let mut pooled = Vec::new();
            for spec in &cfg.kernels {
                let kw = rows_of(params, &format!("enc.cnn.k{}_w", spec.width));
                let kb = vec_of(params, &format!("enc.cnn.k{}_b", spec.width));
                for f in 0..spec.filters {
                    let kernel = row(&kw, f);
                    let mut best = f64::NEG_INFINITY;
                    for j in 0..=(n - spec.width) {
                        let mut acc = kb[f];
                        for (c, &u) in units[j..j + spec.width].iter().enumerate() {
                            let emb = row(&unit_emb, u as usize);
                            for (r, &e) in emb.iter().enumerate() {
                                acc += e * kernel[r * spec.width + c];
                            }
                        }
                        best = best.max(acc.tanh());
                    }
                    pooled.push(best);
                }
            }
            let mut x = pooled;
            for layer in 0..cfg.highway_layers {
                let w_t = rows_of(params, &format!("enc.hw{layer}.w_transform"));
                let b_t = vec_of(params, &format!("enc.hw{layer}.b_transform"));
                let w_g = rows_of(params, &format!("enc.hw{layer}.w_gate"));
                let b_g = vec_of(params, &format!("enc.hw{layer}.b_gate"));
                let t = sigmoid_v(&add(&matvec(&w_g, &x), &b_g));
                let h = tanh_v(&add(&matvec(&w_t, &x), &b_t));
                x = (0..x.len()).map(|k| t[k] * h[k] + (1.0 - t[k]) * x[k]).collect();
            }
            x
        }
    };
    m_w.iter().zip(&e_w).map(|(m, e)| m.max(*e)).collect()
}

/// Graph-free sequence scoring: the same decision order, recomputed from
/// raw parameter arrays.
fn naive_score(model: &OsmModel, source: &[SourceWord], target: &[u32], align: &[usize]) -> (f64, f64) {
    let params = &model.params;
    let s_len = source.len();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(s_len + 2);
    rows.push(vec_of(params, "enc.null_row"));
    for w in source {
        rows.push(naive_encode(model, w));
    }
    rows.push(vec_of(params, "enc.finish_row"));

    let tgt_emb = rows_of(params, "tgt.emb");
    let state_w = rows_of(params, "osm.state_w");
    let state_b = vec_of(params, "osm.state_b");
    let out_w = rows_of(params, "osm.out_w");
    let out_b = vec_of(params, "osm.out_b");
    let w_state_align = rows_of(params, "osm.w_state_align");
    let w_word_align = rows_of(params, "osm.w_word_align");
    let b_feat = vec_of(params, "osm.b_feat");

    let jump_row = |candidate: usize, prev: usize| -> Vec<f64> {
        let mut feat = vec![0.0; 8];
        if candidate == 0 {
            feat[4] = 1.0;
        } else if candidate == s_len + 1 {
            feat[5] = 1.0;
        } else {
            let d = candidate as f64 - prev as f64;
            if d == 0.0 {
                feat[0] = 1.0;
            } else if d == 1.0 {
                feat[1] = 1.0;
            } else if d >= 2.0 {
                feat[2] = 1.0;
            } else {
                feat[3] = 1.0;
            }
            feat[6] = d;
            feat[7] = if s_len == 0 { 0.0 } else { d / s_len as f64 };
        }
        feat
    };

    let align_logits = |h: &[f64], emitted: u32, prev: usize| -> Vec<f64> {
        let wh = matvec(&w_state_align, h);
        let wt = matvec(&w_word_align, row(&tgt_emb, emitted as usize));
        (0..s_len + 2)
            .map(|cand| {
                let phi = jump_row(cand, prev);
                let feat: f64 = phi.iter().zip(&b_feat).map(|(a, b)| a * b).sum();
                let sh: f64 = rows[cand].iter().zip(&wh).map(|(a, b)| a * b).sum();
                let st: f64 = rows[cand].iter().zip(&wt).map(|(a, b)| a * b).sum();
                feat + sh + st
            })
            .collect()
    };

    let mut h = vec_of(params, "osm.h0");
    let mut last_word = START_ID;
    let mut prev_pos = 0usize;
    let mut log_align = 0.0;
    let mut log_word = 0.0;
    for (&word, &jump) in target.iter().zip(align) {
        let logits = align_logits(&h, last_word, prev_pos);
        log_align += log_softmax_masked(&logits, None)[jump];

        let emb = row(&tgt_emb, last_word as usize);
        let concat: Vec<f64> = h
            .iter()
            .chain(emb.iter())
            .chain(rows[jump].iter())
            .copied()
            .collect();
        h = tanh_v(&add(&matvec(&state_w, &concat), &state_b));

        let wlogits = add(&matvec(&out_w, &h), &out_b);
        log_word += log_softmax_masked(&wlogits, Some(START_ID as usize))[word as usize];

        last_word = word;
        if jump != 0 {
            prev_pos = jump;
        }
    }
    let logits = align_logits(&h, last_word, prev_pos);
    log_align += log_softmax_masked(&logits, None)[s_len + 1];
    (log_align, log_word)
}

fn build_model(kind: EncoderKind, seed: u64) -> OsmModel {
    let src: Vec<String> = ["abca", "cab", "dba", "db", "bacd"]
        .iter()
        .flat_map(|t| std::iter::repeat_n(t.to_string(), 6))
        .collect();
    let tgt: Vec<String> = ["x", "y", "z"]
        .iter()
        .flat_map(|t| std::iter::repeat_n(t.to_string(), 6))
        .collect();
    let source_vocab = Vocabulary::build(src.iter().map(|s| s.as_str()), 5).unwrap();
    let target_vocab = Vocabulary::build(tgt.iter().map(|s| s.as_str()), 5).unwrap();
    let lexicon = SegmentationLexicon::char_mode(src.iter().map(|s| s.as_str()));
    let mut enc = EncoderConfig::new(kind, UnitMode::Char);
    enc.word_dim = 7;
    enc.unit_dim = if kind == EncoderKind::Bag { 7 } else { 4 };
    enc.lstm_hidden = 5;
    enc.kernels = vec![
        KernelSpec { width: 1, filters: 2 },
        KernelSpec { width: 2, filters: 3 },
        KernelSpec { width: 3, filters: 2 },
    ];
    let mut config = ModelConfig::new(enc);
    config.target_dim = 6;
    config.state_dim = 9;
    OsmModel::init(config, source_vocab, target_vocab, lexicon, seed).unwrap()
}

#[test]
fn naive_recurrence_matches_model_scoring_for_every_encoder_kind() {
    for kind in [EncoderKind::Word, EncoderKind::Bag, EncoderKind::Bilstm, EncoderKind::Cnn] {
        for seed in [3u64, 17, 2026] {
            let model = build_model(kind, seed);
            let pair = PreparedPair::new(
                &["abca".to_string(), "db".to_string(), "cab".to_string()],
                &["x".to_string(), "z".to_string(), "y".to_string(), "x".to_string()],
                vec![2, NULL_POS, 3, 1],
                &model.spec.source_vocab,
                &model.spec.target_vocab,
                &model.spec.lexicon,
            )
            .unwrap();
            let ops = extract_operations(&pair.pair);
            let score = model.sequence_score(&pair, &ops).unwrap();
            let (la, lw) = naive_score(&model, &pair.source, &pair.pair.target, &pair.pair.align);
            let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1e-30);
            assert!(
                rel(score.log_align, la) < 1e-10,
                "{kind:?} seed {seed}: align {} vs naive {la}",
                score.log_align
            );
            assert!(
                rel(score.log_word, lw) < 1e-10,
                "{kind:?} seed {seed}: word {} vs naive {lw}",
                score.log_word
            );
        }
    }
}

#[test]
fn naive_recurrence_matches_on_unknown_and_empty_edges() {
    // rare source word (UNK id, its own characters) and an empty source
    let model = build_model(EncoderKind::Cnn, 5);
    let pair = PreparedPair::new(
        &["dacb".to_string()],
        &["y".to_string()],
        vec![1],
        &model.spec.source_vocab,
        &model.spec.target_vocab,
        &model.spec.lexicon,
    )
    .unwrap();
    assert_eq!(pair.source[0].id, opseq::corpus::UNK_ID);
    let ops = extract_operations(&pair.pair);
    let score = model.sequence_score(&pair, &ops).unwrap();
    let (la, lw) = naive_score(&model, &pair.source, &pair.pair.target, &pair.pair.align);
    assert!((score.log_align - la).abs() < 1e-12);
    assert!((score.log_word - lw).abs() < 1e-12);

    let empty = PreparedPair::new(
        &[],
        &[],
        vec![],
        &model.spec.source_vocab,
        &model.spec.target_vocab,
        &model.spec.lexicon,
    )
    .unwrap();
    let ops = extract_operations(&empty.pair);
    let score = model.sequence_score(&empty, &ops).unwrap();
    let (la, lw) = naive_score(&model, &empty.source, &[], &[]);
    assert_eq!(score.word_decisions, 0);
    assert!((score.log_align - la).abs() < 1e-12);
    assert_eq!(score.log_word, lw);
}
