use std::collections::{HashMap, HashSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use crate::corpus::{
    load_alignments, parse_alignment_line, read_parallel,
    read_segmentation_path, read_sentences_path, PreparedPair, SegmentationLexicon, UnitMode,
    Vocabulary,
};
use crate::eval::{
    band_report, lexicon_embeddings, multilabel_accuracy, perplexities, query_neighbors,
    BandReport, NeighborOutcome, TagLexicon, TranslationTable,
};
use crate::numkit::{grad_check, NumError, GRAD_CHECK_TOLERANCE};
use crate::osm::{train, Example, OsmModel};

use super::archive::{load_model_path, save_model_path, LoadedArchive};
use super::config::RunConfig;
use super::CliError;

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| {
        CliError::Io(format!("cannot create {}: {e}", cfg.out_dir.display()))
    })?;
    Ok(cfg.out_dir.clone())
}

fn write_text(path: &Path, content: &str) -> Result<(), CliError> {
    fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn sentence_tokens(sentences: &[Vec<String>]) -> impl Iterator<Item = &str> {
    sentences.iter().flatten().map(|t| t.as_str())
}

/// Read a corpus triple and convert every pair into a prepared example.
fn load_examples(
    source_path: &Path,
    target_path: &Path,
    align_path: &Path,
    source_vocab: &Vocabulary,
    target_vocab: &Vocabulary,
    lexicon: &SegmentationLexicon,
) -> Result<Vec<Example>, CliError> {
    let (source, target) = read_parallel(source_path, target_path)?;
    let lengths: Vec<(usize, usize)> = source
        .iter()
        .zip(&target)
        .map(|(s, t)| (s.len(), t.len()))
        .collect();
    let file = File::open(align_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", align_path.display())))?;
    let aligns = load_alignments(BufReader::new(file), &lengths)?;
    let mut examples = Vec::with_capacity(source.len());
    for ((s, t), a) in source.iter().zip(&target).zip(aligns) {
        let prepared = PreparedPair::new(s, t, a, source_vocab, target_vocab, lexicon)?;
        examples.push(Example {
            ops: prepared.operations(),
            source: prepared.source,
        });
    }
    Ok(examples)
}

fn build_lexicon(cfg: &RunConfig, source_sentences: &[Vec<String>]) -> Result<SegmentationLexicon, CliError> {
    match cfg.unit_mode {
        UnitMode::Char => Ok(SegmentationLexicon::char_mode(sentence_tokens(source_sentences))),
        UnitMode::Morph => {
            let path = cfg.require_path("segmentations", &cfg.segmentations)?;
            let entries = read_segmentation_path(&path)?;
            Ok(SegmentationLexicon::morph_mode(&entries)?)
        }
    }
}

fn vocab_listing(vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for (idx, token) in vocab.id_tokens().enumerate() {
        out.push_str(&format!("{}\t{token}\t{}\n", idx + 2, vocab.count(token)));
    }
    for token in vocab.rare_tokens_sorted() {
        out.push_str(&format!("-\t{token}\t{}\n", vocab.count(token)));
    }
    out
}

pub fn cmd_vocab(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let target = cfg.require_path("target", &cfg.target)?;
    let out = ensure_out_dir(cfg)?;
    let (src_sents, tgt_sents) = read_parallel(&source, &target)?;
    let src_vocab = Vocabulary::build(sentence_tokens(&src_sents), cfg.threshold)?;
    let tgt_vocab = Vocabulary::build(sentence_tokens(&tgt_sents), cfg.threshold)?;
    write_text(&out.join("vocab.src.tsv"), &vocab_listing(&src_vocab))?;
    write_text(&out.join("vocab.tgt.tsv"), &vocab_listing(&tgt_vocab))?;
    println!(
        "source vocabulary: {} ids (threshold {}); target vocabulary: {} ids",
        src_vocab.size(),
        cfg.threshold,
        tgt_vocab.size()
    );
    Ok(())
}

pub fn cmd_segment(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let out = ensure_out_dir(cfg)?;
    let sentences = read_sentences_path(&source)?;
    let lexicon = build_lexicon(cfg, &sentences)?;
    let mut types: Vec<&str> = sentence_tokens(&sentences).collect::<HashSet<_>>().into_iter().collect();
    types.sort_unstable();
    let mut listing = String::new();
    let mut fallbacks = 0usize;
    for word in &types {
        let seg = lexicon.segment(word)?;
        if seg.fallback {
            fallbacks += 1;
        }
        let units: Vec<&str> = seg.units.iter().map(|&u| lexicon.unit(u)).collect();
        listing.push_str(&format!("{word}\t{}\n", units.join(" ")));
    }
    write_text(&out.join("segments.tsv"), &listing)?;
    println!(
        "segmented {} types into {} units ({} whole-word fallbacks)",
        types.len(),
        lexicon.unit_count(),
        fallbacks
    );
    Ok(())
}

pub fn cmd_ops(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let target = cfg.require_path("target", &cfg.target)?;
    let alignments = cfg.require_path("alignments", &cfg.alignments)?;
    let out = ensure_out_dir(cfg)?;
    let (src_sents, tgt_sents) = read_parallel(&source, &target)?;
    let src_vocab = Vocabulary::build(sentence_tokens(&src_sents), cfg.threshold)?;
    let tgt_vocab = Vocabulary::build(sentence_tokens(&tgt_sents), cfg.threshold)?;
    let lexicon = build_lexicon(cfg, &src_sents)?;
    let examples = load_examples(&source, &target, &alignments, &src_vocab, &tgt_vocab, &lexicon)?;
    let mut listing = String::new();
    for example in &examples {
        let mut parts: Vec<String> = example
            .ops
            .emits()
            .map(|(jump, word)| format!("{jump}:{word}"))
            .collect();
        parts.push("FINISH".to_string());
        listing.push_str(&parts.join(" "));
        listing.push('\n');
    }
    write_text(&out.join("ops.txt"), &listing)?;
    write_text(&out.join("vocab.src.tsv"), &vocab_listing(&src_vocab))?;
    write_text(&out.join("vocab.tgt.tsv"), &vocab_listing(&tgt_vocab))?;
    println!("wrote {} operation sequences", examples.len());
    Ok(())
}

pub fn cmd_train(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let target = cfg.require_path("target", &cfg.target)?;
    let alignments = cfg.require_path("alignments", &cfg.alignments)?;
    let dev_source = cfg.require_path("dev-source", &cfg.dev_source)?;
    let dev_target = cfg.require_path("dev-target", &cfg.dev_target)?;
    let dev_alignments = cfg.require_path("dev-alignments", &cfg.dev_alignments)?;
    let seed = cfg.require_seed()?;
    let out = ensure_out_dir(cfg)?;

    let (src_sents, tgt_sents) = read_parallel(&source, &target)?;
    let src_vocab = Vocabulary::build(sentence_tokens(&src_sents), cfg.threshold)?;
    let tgt_vocab = Vocabulary::build(sentence_tokens(&tgt_sents), cfg.threshold)?;
    let lexicon = build_lexicon(cfg, &src_sents)?;

    let train_set = load_examples(&source, &target, &alignments, &src_vocab, &tgt_vocab, &lexicon)?;
    let dev_set = load_examples(
        &dev_source,
        &dev_target,
        &dev_alignments,
        &src_vocab,
        &tgt_vocab,
        &lexicon,
    )?;

    let mut model = OsmModel::init(cfg.model_config(), src_vocab, tgt_vocab, lexicon, seed)
        .map_err(CliError::from)?;
    let report = train(&mut model, &train_set, &dev_set, &cfg.train_config()?)?;

    let mut log = String::from("epoch\ttrain_loss\tdev_log_likelihood\tlearning_rate\n");
    for e in &report.epochs {
        let dev = e
            .dev_log_likelihood
            .map(|d| format!("{d:.6}"))
            .unwrap_or_else(|| "-".to_string());
        log.push_str(&format!(
            "{}\t{:.6}\t{dev}\t{}\n",
            e.epoch, e.train_loss, e.learning_rate
        ));
    }
    log.push_str(&format!(
        "# stop: {} (best epoch {}, dev log-likelihood {:.6})\n",
        report.stop_reason.as_str(),
        report.best_epoch,
        report.best_dev_log_likelihood
    ));
    write_text(&out.join("train_log.tsv"), &log)?;
    save_model_path(&out.join("model.osm"), &model, &cfg.echo())?;
    println!(
        "trained {} epochs; stop: {}; best epoch {} (dev log-likelihood {:.6}); model: {}",
        report.epochs.len(),
        report.stop_reason.as_str(),
        report.best_epoch,
        report.best_dev_log_likelihood,
        out.join("model.osm").display()
    );
    Ok(())
}

fn load_archive(cfg: &RunConfig) -> Result<LoadedArchive, CliError> {
    let path = cfg.require_path("model", &cfg.model)?;
    load_model_path(&path)
}

pub fn cmd_ppl(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let target = cfg.require_path("target", &cfg.target)?;
    let alignments = cfg.require_path("alignments", &cfg.alignments)?;
    let out = ensure_out_dir(cfg)?;
    let archive = load_archive(cfg)?;
    let model = &archive.model;
    let examples = load_examples(
        &source,
        &target,
        &alignments,
        &model.spec.source_vocab,
        &model.spec.target_vocab,
        &model.spec.lexicon,
    )?;
    let report = perplexities(model, &examples)?;
    let tsv = format!(
        "word_ppl\talign_ppl\tword_decisions\talign_decisions\n{:.6}\t{:.6}\t{}\t{}\n",
        report.word_ppl, report.align_ppl, report.word_decisions, report.align_decisions
    );
    write_text(&out.join("ppl.tsv"), &tsv)?;
    println!(
        "word perplexity {:.4} over {} decisions; alignment perplexity {:.4} over {} decisions",
        report.word_ppl, report.word_decisions, report.align_ppl, report.align_decisions
    );
    Ok(())
}

/// Parse one n-best line: `sent_id ||| target tokens ||| i-j pairs`.
fn parse_nbest_line(
    line: &str,
    line_no: usize,
) -> Result<(usize, Vec<String>, String), CliError> {
    let parts: Vec<&str> = line.split("|||").map(str::trim).collect();
    if parts.len() != 3 {
        return Err(CliError::Parse(format!(
            "nbest line {line_no}: expected `sent_id ||| tokens ||| alignment`"
        )));
    }
    let sent_id: usize = parts[0].parse().map_err(|_| {
        CliError::Parse(format!("nbest line {line_no}: bad sentence id {:?}", parts[0]))
    })?;
    let tokens: Vec<String> = parts[1].split_whitespace().map(|t| t.to_string()).collect();
    Ok((sent_id, tokens, parts[2].to_string()))
}

pub fn cmd_score(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let nbest = cfg.require_path("nbest", &cfg.nbest)?;
    let out = ensure_out_dir(cfg)?;
    let archive = load_archive(cfg)?;
    let model = &archive.model;
    let sentences = read_sentences_path(&source)?;
    let mut prepared: HashMap<usize, Vec<crate::corpus::SourceWord>> = HashMap::new();

    let text = fs::read_to_string(&nbest)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", nbest.display())))?;
    let mut rows = String::from("sent_id\tlog_align\tlog_word\n");
    let mut scored = 0usize;
    let mut failed = 0usize;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = idx + 1;
        let (sent_id, tokens, align_text) = parse_nbest_line(line, line_no)?;
        let result = (|| -> Result<(f64, f64), CliError> {
            let sentence = sentences.get(sent_id).ok_or_else(|| {
                CliError::Parse(format!(
                    "nbest line {line_no}: sentence id {sent_id} out of range"
                ))
            })?;
            let words = match prepared.get(&sent_id) {
                Some(w) => w.clone(),
                None => {
                    let w = crate::corpus::prepare_source_words(
                        sentence,
                        &model.spec.source_vocab,
                        &model.spec.lexicon,
                    )?;
                    prepared.insert(sent_id, w.clone());
                    w
                }
            };
            let align = parse_alignment_line(&align_text, sentence.len(), tokens.len(), line_no)?;
            let target: Vec<u32> = tokens
                .iter()
                .map(|t| model.spec.target_vocab.lookup(t))
                .collect();
            let scores = model.score_nbest(&words, &[(target, align)]);
            let score = scores.into_iter().next().unwrap().map_err(CliError::from)?;
            Ok((score.log_align, score.log_word))
        })();
        match result {
            Ok((la, lw)) => {
                rows.push_str(&format!("{sent_id}\t{la:.16e}\t{lw:.16e}\n"));
                scored += 1;
            }
            Err(e) => {
                rows.push_str(&format!("{sent_id}\tERROR\t{e}\n"));
                failed += 1;
            }
        }
    }
    write_text(&out.join("nbest_scores.tsv"), &rows)?;
    print!("{rows}");
    println!("# scored {scored} candidates, {failed} failed");
    Ok(())
}

fn read_queries(cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    if let Some(q) = &cfg.query {
        return Ok(vec![q.clone()]);
    }
    let path = cfg.require_path("queries", &cfg.queries)?;
    let text = fs::read_to_string(&path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_string())
        .collect())
}

pub fn cmd_neighbors(cfg: &RunConfig) -> Result<(), CliError> {
    let out = ensure_out_dir(cfg)?;
    let archive = load_archive(cfg)?;
    let model = &archive.model;
    let queries = read_queries(cfg)?;
    let lexicon = lexicon_embeddings(model)?;
    let mut rows = String::from("query\tband\tneighbors\n");
    for query in &queries {
        let band = crate::corpus::frequency_band(model.spec.source_vocab.count(query));
        match query_neighbors(model, &lexicon, query, cfg.k_neighbors)? {
            NeighborOutcome::Ranked(neighbors) => {
                let listed: Vec<String> = neighbors
                    .iter()
                    .map(|n| format!("{}:{:.4}", n.word, n.cosine))
                    .collect();
                rows.push_str(&format!("{query}\t{band}\t{}\n", listed.join(" ")));
            }
            NeighborOutcome::NotRepresentable => {
                rows.push_str(&format!("{query}\t{band}\t-\n"));
            }
        }
    }
    write_text(&out.join("neighbors.tsv"), &rows)?;
    print!("{rows}");
    Ok(())
}

fn print_and_save(report: &BandReport, out: &Path, filename: &str) -> Result<(), CliError> {
    write_text(&out.join(filename), &report.render_tsv())?;
    print!("{}", report.render_text());
    Ok(())
}

pub fn cmd_synonyms(cfg: &RunConfig) -> Result<(), CliError> {
    let source = cfg.require_path("source", &cfg.source)?;
    let target = cfg.require_path("target", &cfg.target)?;
    let alignments = cfg.require_path("alignments", &cfg.alignments)?;
    let out = ensure_out_dir(cfg)?;
    let archive = load_archive(cfg)?;
    let model = &archive.model;
    let queries = read_queries(cfg)?;

    // the gold table comes from the raw bitext, without UNK replacement
    let (src_sents, tgt_sents) = read_parallel(&source, &target)?;
    let lengths: Vec<(usize, usize)> = src_sents
        .iter()
        .zip(&tgt_sents)
        .map(|(s, t)| (s.len(), t.len()))
        .collect();
    let file = File::open(&alignments)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", alignments.display())))?;
    let aligns = load_alignments(BufReader::new(file), &lengths)?;
    let bitext: Vec<(&[String], &[String], &[usize])> = src_sents
        .iter()
        .zip(&tgt_sents)
        .zip(&aligns)
        .map(|((s, t), a)| (s.as_slice(), t.as_slice(), a.as_slice()))
        .collect();
    let table = TranslationTable::estimate(bitext.iter().map(|(s, t, a)| (*s, *t, *a)));
    let mut corpus_counts: HashMap<&str, u64> = HashMap::new();
    for tok in sentence_tokens(&src_sents) {
        *corpus_counts.entry(tok).or_insert(0) += 1;
    }

    let lexicon = lexicon_embeddings(model)?;
    let mut per_query = String::from("query\tband\tgold\tneighbors\toverlap\n");
    let mut band_items: Vec<(u64, Option<f64>)> = Vec::new();
    let mut overall: Vec<(HashSet<String>, HashSet<String>)> = Vec::new();
    let mut skipped = 0usize;
    for query in &queries {
        let corpus_freq = corpus_counts.get(query.as_str()).copied().unwrap_or(0);
        if corpus_freq < cfg.synonym_floor {
            skipped += 1;
            per_query.push_str(&format!("{query}\t-\tskipped:below-frequency-floor\t\t\n"));
            continue;
        }
        let Some(gold) = table.pivot_synonyms(query, cfg.top_synonyms) else {
            skipped += 1;
            per_query.push_str(&format!("{query}\t-\tskipped:no-links\t\t\n"));
            continue;
        };
        let gold_set: HashSet<String> = gold.iter().map(|(w, _)| w.clone()).collect();
        let train_count = model.spec.source_vocab.count(query);
        let band = crate::corpus::frequency_band(train_count);
        match query_neighbors(model, &lexicon, query, cfg.k_neighbors)? {
            NeighborOutcome::Ranked(neighbors) => {
                let neighbor_set: HashSet<String> =
                    neighbors.iter().map(|n| n.word.clone()).collect();
                let overlap = gold_set.iter().any(|g| neighbor_set.contains(g));
                per_query.push_str(&format!(
                    "{query}\t{band}\t{}\t{}\t{}\n",
                    gold_set.iter().cloned().collect::<Vec<_>>().join(","),
                    neighbors
                        .iter()
                        .map(|n| n.word.clone())
                        .collect::<Vec<_>>()
                        .join(","),
                    if overlap { 1 } else { 0 }
                ));
                band_items.push((train_count, Some(if overlap { 1.0 } else { 0.0 })));
                overall.push((gold_set, neighbor_set));
            }
            NeighborOutcome::NotRepresentable => {
                per_query.push_str(&format!("{query}\t{band}\t{}\t-\t-\n",
                    gold_set.iter().cloned().collect::<Vec<_>>().join(",")));
                band_items.push((train_count, None));
            }
        }
    }
    write_text(&out.join("synonyms.tsv"), &per_query)?;
    let report = band_report("multilabel-accuracy", &band_items);
    print_and_save(&report, &out, "synonyms_bands.tsv")?;
    if !overall.is_empty() {
        println!("overall multilabel accuracy: {:.4}", multilabel_accuracy(&overall)?);
    }
    if skipped > 0 {
        println!("skipped {skipped} queries (frequency floor {} or no links)", cfg.synonym_floor);
    }
    Ok(())
}

pub fn cmd_morphsim(cfg: &RunConfig) -> Result<(), CliError> {
    let tag_path = cfg.require_path("tag-lexicon", &cfg.tag_lexicon)?;
    let out = ensure_out_dir(cfg)?;
    let archive = load_archive(cfg)?;
    let model = &archive.model;
    let queries = read_queries(cfg)?;
    let file = File::open(&tag_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", tag_path.display())))?;
    let tags = TagLexicon::parse(BufReader::new(file))?;
    let lexicon = lexicon_embeddings(model)?;

    let mut tag_items: Vec<(u64, Option<f64>)> = Vec::new();
    let mut lemma_items: Vec<(u64, Option<f64>)> = Vec::new();
    let mut skipped = 0usize;
    for query in &queries {
        if !tags.covers(query) {
            skipped += 1;
            continue;
        }
        let count = model.spec.source_vocab.count(query);
        match query_neighbors(model, &lexicon, query, cfg.k_neighbors)? {
            NeighborOutcome::Ranked(neighbors) => {
                let names: Vec<&str> = neighbors.iter().map(|n| n.word.as_str()).collect();
                let sims: Vec<f64> = names
                    .iter()
                    .filter_map(|n| tags.tag_similarity(query, n))
                    .collect();
                if !sims.is_empty() {
                    tag_items.push((count, Some(sims.iter().sum::<f64>() / sims.len() as f64)));
                }
                if let Some(l) = tags.lemma_similarity(query, &names) {
                    lemma_items.push((count, Some(l)));
                }
            }
            NeighborOutcome::NotRepresentable => {
                tag_items.push((count, None));
                lemma_items.push((count, None));
            }
        }
    }
    println!("tag similarity (minimum Hamming over analysis sets):");
    let tag_rep = band_report("tag-similarity", &tag_items);
    print_and_save(&tag_rep, &out, "morphsim_tags.tsv")?;
    println!("lemma similarity (fraction of neighbours sharing a lemma; stand-in metric):");
    let lemma_rep = band_report("lemma-similarity", &lemma_items);
    print_and_save(&lemma_rep, &out, "morphsim_lemmas.tsv")?;
    if skipped > 0 {
        println!("skipped {skipped} queries without tag coverage");
    }
    Ok(())
}

/// Built-in three-sentence fixture for gradient checking. Sentences are
/// kept short because larger losses inflate the central-difference
/// cancellation noise against the relative-error floor, while words are
/// kept several units long so recurrent-gate gradients accumulate clear of
/// that floor. The jumps cover the forward, d >= 2, and NULL classes, and
/// the two-letter word exercises the padding unit under wide kernels.
fn gradcheck_fixture() -> (Vec<Vec<String>>, Vec<Vec<String>>, Vec<Vec<usize>>) {
    let s = |line: &str| line.split_whitespace().map(|t| t.to_string()).collect::<Vec<_>>();
    let sources = vec![s("abca cab"), s("dba db"), s("bacd")];
    let targets = vec![s("x"), s("y"), s("x")];
    let aligns = vec![vec![1], vec![2], vec![0]];
    (sources, targets, aligns)
}

pub fn cmd_gradcheck(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = cfg.require_seed()?;
    let (sources, targets, aligns) = gradcheck_fixture();
    // repeat each type past the threshold so the toy vocabulary keeps them
    let mut src_stream: Vec<String> = Vec::new();
    let mut tgt_stream: Vec<String> = Vec::new();
    for _ in 0..6 {
        src_stream.extend(sentence_tokens(&sources).map(|t| t.to_string()));
        tgt_stream.extend(sentence_tokens(&targets).map(|t| t.to_string()));
    }
    let src_vocab = Vocabulary::build(src_stream.iter().map(|s| s.as_str()), cfg.threshold)?;
    let tgt_vocab = Vocabulary::build(tgt_stream.iter().map(|s| s.as_str()), cfg.threshold)?;
    let lexicon = match cfg.unit_mode {
        UnitMode::Char => SegmentationLexicon::char_mode(src_stream.iter().map(|s| s.as_str())),
        UnitMode::Morph => {
            // synthetic single-letter morphs for the fixture words
            let entries: Vec<(String, Vec<String>)> = ["abca", "cab", "dba", "db", "bacd"]
                .iter()
                .map(|w| (w.to_string(), w.chars().map(|c| c.to_string()).collect()))
                .collect();
            SegmentationLexicon::morph_mode(&entries)?
        }
    };

    let mut model = OsmModel::init(cfg.model_config(), src_vocab, tgt_vocab, lexicon, seed)?;
    let mut examples = Vec::new();
    for ((s, t), a) in sources.iter().zip(&targets).zip(&aligns) {
        let prepared = PreparedPair::new(
            s,
            t,
            a.clone(),
            &model.spec.source_vocab,
            &model.spec.target_vocab,
            &model.spec.lexicon,
        )?;
        examples.push(Example {
            ops: prepared.operations(),
            source: prepared.source,
        });
    }

    // Check each sentence loss separately: summing sentences inflates the
    // loss magnitude, and the central-difference cancellation noise with it.
    let spec = &model.spec;
    let mut max_rel = 0.0f64;
    for example in &examples {
        let rel = grad_check(&mut model.params, 1e-4, |params, g| {
            spec.build_loss(g, params, &example.source, &example.ops)
                .map_err(|e| NumError::Contract(e.to_string()))
        })?;
        max_rel = max_rel.max(rel);
    }

    println!(
        "gradcheck: {} parameters, {} entries, max relative error {max_rel:.3e} (tolerance {GRAD_CHECK_TOLERANCE:.0e})",
        model.params.len(),
        model.params.entry_count()
    );
    if max_rel > GRAD_CHECK_TOLERANCE {
        return Err(CliError::Numeric(format!(
            "gradient check failed: max relative error {max_rel:.3e} exceeds {GRAD_CHECK_TOLERANCE:.0e}"
        )));
    }
    println!("gradcheck: pass");
    Ok(())
}
