//! End-to-end checks of the command-line surface through the built binary:
//! exit codes, byte-determinism of artifacts, and archive-backed scoring.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn opseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opseq"))
        .args(args)
        .output()
        .expect("failed to launch binary")
}

struct Fixture {
    #[allow(dead_code)]
    dir: tempfile::TempDir,
    src: PathBuf,
    tgt: PathBuf,
    align: PathBuf,
    root: PathBuf,
}

/// Three-sentence parallel fixture, with every type repeated past the
/// threshold by duplicating the block six times.
fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let src_block = "ab cd ab\ncd ef\nef ab\n";
    let tgt_block = "xy zw xy\nzw uv\nuv xy\n";
    let align_block = "0-0 1-1 2-2\n0-0 1-1\n1-0 0-1\n";
    let src = dir.path().join("corpus.src");
    let tgt = dir.path().join("corpus.tgt");
    let align = dir.path().join("corpus.align");
    fs::write(&src, src_block.repeat(6)).unwrap();
    fs::write(&tgt, tgt_block.repeat(6)).unwrap();
    fs::write(&align, align_block.repeat(6)).unwrap();
    let root = dir.path().to_path_buf();
    Fixture {
        dir,
        src,
        tgt,
        align,
        root,
    }
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ops_writes_one_finish_terminated_line_per_sentence() {
    let f = fixture();
    let out = f.root.join("ops_out");
    let run = opseq(&[
        "ops",
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let ops = fs::read_to_string(out.join("ops.txt")).unwrap();
    let lines: Vec<&str> = ops.lines().collect();
    assert_eq!(lines.len(), 18);
    for line in &lines {
        assert!(line.ends_with("FINISH"), "line {line:?}");
    }
    // first sentence: monotone jumps
    assert_eq!(lines[0], "1:2 2:3 3:2 FINISH");
}

#[test]
fn reruns_are_byte_identical() {
    let f = fixture();
    for cmd in ["vocab", "ops"] {
        let out1 = f.root.join(format!("{cmd}_1"));
        let out2 = f.root.join(format!("{cmd}_2"));
        for out in [&out1, &out2] {
            let run = opseq(&[
                cmd,
                "--source", path_str(&f.src),
                "--target", path_str(&f.tgt),
                "--alignments", path_str(&f.align),
                "--out", path_str(out),
            ]);
            assert!(run.status.success());
        }
        for file in ["vocab.src.tsv", "vocab.tgt.tsv"] {
            assert_eq!(
                fs::read(out1.join(file)).unwrap(),
                fs::read(out2.join(file)).unwrap(),
                "{cmd}/{file}"
            );
        }
        if cmd == "ops" {
            assert_eq!(
                fs::read(out1.join("ops.txt")).unwrap(),
                fs::read(out2.join("ops.txt")).unwrap()
            );
        }
    }
}

#[test]
fn missing_alignment_file_exits_2_naming_the_path() {
    let f = fixture();
    let missing = f.root.join("no-such-alignments.txt");
    let run = opseq(&[
        "ops",
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&missing),
        "--out", path_str(&f.root.join("x")),
    ]);
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(
        stderr.contains("no-such-alignments.txt"),
        "stderr must name the path: {stderr}"
    );
}

#[test]
fn train_without_seed_exits_2() {
    let f = fixture();
    let run = opseq(&[
        "train",
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--dev-source", path_str(&f.src),
        "--dev-target", path_str(&f.tgt),
        "--dev-alignments", path_str(&f.align),
        "--out", path_str(&f.root.join("t")),
    ]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("--seed"));
}

fn train_small(f: &Fixture, out: &Path, encoder: &str) {
    let run = opseq(&[
        "train",
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--dev-source", path_str(&f.src),
        "--dev-target", path_str(&f.tgt),
        "--dev-alignments", path_str(&f.align),
        "--seed", "5",
        "--encoder", encoder,
        "--word-dim", "6",
        "--unit-dim", "3",
        "--kernels", "1:2,2:2,3:2",
        "--target-dim", "5",
        "--state-dim", "8",
        "--max-epochs", "4",
        "--patience", "4",
        "--out", path_str(out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn trained_archive_reproduces_dev_perplexities() {
    let f = fixture();
    let tout = f.root.join("train_out");
    train_small(&f, &tout, "cnn");
    let model = tout.join("model.osm");
    assert!(model.exists());
    let log = fs::read_to_string(tout.join("train_log.tsv")).unwrap();
    assert!(log.contains("# stop:"), "log should record the stop reason: {log}");

    let run_ppl = |out: &str| {
        let pout = f.root.join(out);
        let run = opseq(&[
            "ppl",
            "--model", path_str(&model),
            "--source", path_str(&f.src),
            "--target", path_str(&f.tgt),
            "--alignments", path_str(&f.align),
            "--out", path_str(&pout),
        ]);
        assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
        fs::read_to_string(pout.join("ppl.tsv")).unwrap()
    };
    let first = run_ppl("ppl_1");
    let second = run_ppl("ppl_2");
    assert_eq!(first, second, "re-evaluation must reproduce perplexities");
    let values: Vec<f64> = first
        .lines()
        .nth(1)
        .unwrap()
        .split('\t')
        .take(2)
        .map(|v| v.parse().unwrap())
        .collect();
    assert!(values[0] >= 1.0 && values[1] >= 1.0);
}

#[test]
fn duplicated_nbest_candidates_get_identical_feature_rows() {
    let f = fixture();
    let tout = f.root.join("score_train");
    train_small(&f, &tout, "bag");
    let nbest = f.root.join("cands.nbest");
    fs::write(
        &nbest,
        "0 ||| xy zw xy ||| 0-0 1-1 2-2\n0 ||| xy zw xy ||| 0-0 1-1 2-2\n0 ||| zw zw xy ||| 0-0 1-1\n",
    )
    .unwrap();
    let sout = f.root.join("score_out");
    let run = opseq(&[
        "score",
        "--model", path_str(&tout.join("model.osm")),
        "--source", path_str(&f.src),
        "--nbest", path_str(&nbest),
        "--out", path_str(&sout),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = fs::read_to_string(sout.join("nbest_scores.tsv")).unwrap();
    let lines: Vec<&str> = rows.lines().collect();
    assert_eq!(lines[1], lines[2], "duplicate candidates must score identically");
    assert_ne!(lines[1], lines[3]);
    // malformed alignment (wrong token count) must isolate, not abort
    fs::write(&nbest, "0 ||| xy zw ||| 0-0 9-9\n0 ||| xy ||| 0-0\n").unwrap();
    let run = opseq(&[
        "score",
        "--model", path_str(&tout.join("model.osm")),
        "--source", path_str(&f.src),
        "--nbest", path_str(&nbest),
        "--out", path_str(&sout),
    ]);
    assert!(run.status.success());
    let rows = fs::read_to_string(sout.join("nbest_scores.tsv")).unwrap();
    assert!(rows.lines().nth(1).unwrap().contains("ERROR"));
    assert!(!rows.lines().nth(2).unwrap().contains("ERROR"));
}

#[test]
fn gradcheck_exit_codes_reflect_the_tolerance() {
    let ok = opseq(&[
        "gradcheck",
        "--seed", "1",
        "--word-dim", "6",
        "--unit-dim", "3",
        "--target-dim", "5",
        "--state-dim", "6",
        "--lstm-hidden", "4",
        "--kernels", "1:2,2:2,3:2",
    ]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.contains("max relative error"));
    assert!(stdout.contains("pass"));

    let missing_seed = opseq(&["gradcheck"]);
    assert_eq!(missing_seed.status.code(), Some(2));
}

#[test]
fn config_file_applies_and_flags_win() {
    let f = fixture();
    let cfg = f.root.join("run.conf");
    fs::write(
        &cfg,
        format!(
            "source = {}\ntarget = {}\nthreshold = 5\nout = {}\n",
            f.src.display(),
            f.tgt.display(),
            f.root.join("conf_out").display()
        ),
    )
    .unwrap();
    let run = opseq(&["vocab", "--config", path_str(&cfg)]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(f.root.join("conf_out").join("vocab.src.tsv").exists());

    // a flag overrides the config file's output directory
    let run = opseq(&[
        "vocab",
        "--config", path_str(&cfg),
        "--out", path_str(&f.root.join("flag_out")),
    ]);
    assert!(run.status.success());
    assert!(f.root.join("flag_out").join("vocab.src.tsv").exists());
}

#[test]
fn segment_lists_every_type_with_its_units() {
    let f = fixture();
    let out = f.root.join("seg_out");
    let run = opseq(&[
        "segment",
        "--source", path_str(&f.src),
        "--out", path_str(&out),
    ]);
    assert!(run.status.success());
    let seg = fs::read_to_string(out.join("segments.tsv")).unwrap();
    assert!(seg.contains("ab\ta b"));
    assert!(seg.contains("cd\tc d"));
    assert!(seg.contains("ef\te f"));

    // morph mode consumes an analyser file and reports fallbacks
    let morphs = f.root.join("morphs.tsv");
    fs::write(&morphs, "ab\tab\ncd\tc d\n").unwrap();
    let out2 = f.root.join("seg_morph");
    let run = opseq(&[
        "segment",
        "--source", path_str(&f.src),
        "--mode", "morph",
        "--segmentations", path_str(&morphs),
        "--out", path_str(&out2),
    ]);
    assert!(run.status.success());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("1 whole-word fallbacks"), "{stdout}");
    let seg = fs::read_to_string(out2.join("segments.tsv")).unwrap();
    assert!(seg.contains("cd\tc d"));
}

#[test]
fn unknown_subcommand_and_bad_flags_exit_2() {
    let run = opseq(&["frobnicate"]);
    assert_eq!(run.status.code(), Some(2));
    let run = opseq(&["vocab", "--no-such-flag", "x"]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn morphsim_runs_over_a_trained_archive() {
    let f = fixture();
    let tout = f.root.join("morph_train");
    train_small(&f, &tout, "bilstm");
    let tags = f.root.join("tags.tsv");
    fs::write(&tags, "ab\tl1\t10110\ncd\tl1\t10011\nef\tl2\t00110\n").unwrap();
    let queries = f.root.join("queries.txt");
    fs::write(&queries, "ab\ncd\nunknown\n").unwrap();
    let out = f.root.join("morph_out");
    let run = opseq(&[
        "morphsim",
        "--model", path_str(&tout.join("model.osm")),
        "--tag-lexicon", path_str(&tags),
        "--queries", path_str(&queries),
        "--k", "2",
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("morphsim_tags.tsv").exists());
    assert!(out.join("morphsim_lemmas.tsv").exists());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("skipped 1 queries"), "{stdout}");
}

#[test]
fn synonyms_reports_band_accuracy() {
    let f = fixture();
    let tout = f.root.join("syn_train");
    train_small(&f, &tout, "cnn");
    let queries = f.root.join("queries.txt");
    fs::write(&queries, "ab\ncd\n").unwrap();
    let out = f.root.join("syn_out");
    let run = opseq(&[
        "synonyms",
        "--model", path_str(&tout.join("model.osm")),
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--queries", path_str(&queries),
        "--k", "2",
        "--out", path_str(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(out.join("synonyms.tsv").exists());
    assert!(out.join("synonyms_bands.tsv").exists());
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(stdout.contains("overall multilabel accuracy"), "{stdout}");
}

#[test]
fn morph_mode_trains_and_reloads_through_the_archive() {
    let f = fixture();
    let morphs = f.root.join("morphs.tsv");
    fs::write(&morphs, "ab\ta b\ncd\tc d\nef\te f\n").unwrap();
    let tout = f.root.join("morph_train_out");
    let run = opseq(&[
        "train",
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--dev-source", path_str(&f.src),
        "--dev-target", path_str(&f.tgt),
        "--dev-alignments", path_str(&f.align),
        "--seed", "5",
        "--encoder", "bag",
        "--mode", "morph",
        "--segmentations", path_str(&morphs),
        "--word-dim", "6",
        "--target-dim", "5",
        "--state-dim", "8",
        "--max-epochs", "3",
        "--patience", "3",
        "--out", path_str(&tout),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let pout = f.root.join("morph_ppl");
    let run = opseq(&[
        "ppl",
        "--model", path_str(&tout.join("model.osm")),
        "--source", path_str(&f.src),
        "--target", path_str(&f.tgt),
        "--alignments", path_str(&f.align),
        "--out", path_str(&pout),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    // morph mode without a segmentation file is a usage error
    let run = opseq(&[
        "segment",
        "--source", path_str(&f.src),
        "--mode", "morph",
        "--out", path_str(&f.root.join("x")),
    ]);
    assert_eq!(run.status.code(), Some(2));
}

#[test]
fn single_query_flag_works_like_a_one_line_file() {
    let f = fixture();
    let tout = f.root.join("q_train");
    train_small(&f, &tout, "cnn");
    let run = opseq(&[
        "neighbors",
        "--model", path_str(&tout.join("model.osm")),
        "--query", "ab",
        "--k", "2",
        "--out", path_str(&f.root.join("q_out")),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = fs::read_to_string(f.root.join("q_out").join("neighbors.tsv")).unwrap();
    assert_eq!(rows.lines().count(), 2, "{rows}");
    assert!(rows.lines().nth(1).unwrap().starts_with("ab\t"));
}
