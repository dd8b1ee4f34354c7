use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::corpus::{SegmentationLexicon, UnitMode, Vocabulary};
use crate::encoders::EncoderKind;
use crate::numkit::{Array, ParamSet};
use crate::osm::{ModelConfig, OsmModel};

use super::config::{parse_kernels, render_kernels};
use super::CliError;

pub const ARCHIVE_MAGIC: &str = "OSMMODEL";
pub const ARCHIVE_VERSION: u32 = 1;

/// Serialize a model to the text archive format.
///
/// Layout: the `OSMMODEL 1` header; a `[model]` section with the
/// configuration; a `[run]` section echoing the originating run
/// configuration; `[source_vocab]`/`[target_vocab]` listings
/// (`id<TAB>token<TAB>count`, `-` for sub-threshold tokens); the `[units]`
/// inventory; `[segments]` morpheme entries; and `[params]`, each parameter
/// as a `name ndim dims...` line followed by one line of values printed with
/// 17 significant digits so every `f64` round-trips exactly.
pub fn save_model<W: Write>(
    w: &mut W,
    model: &OsmModel,
    run_echo: &[(String, String)],
) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("archive write failed: {e}"));
    writeln!(w, "{ARCHIVE_MAGIC} {ARCHIVE_VERSION}").map_err(io)?;

    let c = &model.spec.config;
    writeln!(w, "[model]").map_err(io)?;
    writeln!(w, "encoder = {}", c.encoder.kind.as_str()).map_err(io)?;
    writeln!(w, "mode = {}", c.encoder.unit_mode.as_str()).map_err(io)?;
    writeln!(w, "word_dim = {}", c.encoder.word_dim).map_err(io)?;
    writeln!(w, "unit_dim = {}", c.encoder.unit_dim).map_err(io)?;
    writeln!(w, "lstm_hidden = {}", c.encoder.lstm_hidden).map_err(io)?;
    writeln!(w, "kernels = {}", render_kernels(&c.encoder.kernels)).map_err(io)?;
    writeln!(w, "highway_layers = {}", c.encoder.highway_layers).map_err(io)?;
    writeln!(w, "target_dim = {}", c.target_dim).map_err(io)?;
    writeln!(w, "state_dim = {}", c.state_dim).map_err(io)?;

    writeln!(w, "[run]").map_err(io)?;
    for (k, v) in run_echo {
        writeln!(w, "{k} = {v}").map_err(io)?;
    }

    for (section, vocab) in [
        ("source_vocab", &model.spec.source_vocab),
        ("target_vocab", &model.spec.target_vocab),
    ] {
        writeln!(w, "[{section}]").map_err(io)?;
        writeln!(w, "threshold = {}", vocab.threshold()).map_err(io)?;
        for (idx, token) in vocab.id_tokens().enumerate() {
            writeln!(w, "{}\t{token}\t{}", idx + 2, vocab.count(token)).map_err(io)?;
        }
        for token in vocab.rare_tokens_sorted() {
            writeln!(w, "-\t{token}\t{}", vocab.count(token)).map_err(io)?;
        }
    }

    writeln!(w, "[units]").map_err(io)?;
    for (idx, unit) in model.spec.lexicon.units().enumerate() {
        writeln!(w, "{idx}\t{unit}").map_err(io)?;
    }

    writeln!(w, "[segments]").map_err(io)?;
    for (word, units) in model.spec.lexicon.entries() {
        let names: Vec<&str> = units.iter().map(|&u| model.spec.lexicon.unit(u)).collect();
        writeln!(w, "{word}\t{}", names.join(" ")).map_err(io)?;
    }

    writeln!(w, "[params]").map_err(io)?;
    for p in model.params.iter() {
        let dims: Vec<String> = p.value().shape().iter().map(|d| d.to_string()).collect();
        writeln!(w, "{} {} {}", p.name(), p.value().shape().len(), dims.join(" ")).map_err(io)?;
        let mut line = String::with_capacity(p.value().len() * 24);
        for (i, v) in p.value().data().iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format!("{v:.16e}"));
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    Ok(())
}

pub fn save_model_path(
    path: &Path,
    model: &OsmModel,
    run_echo: &[(String, String)],
) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    save_model(&mut w, model, run_echo)?;
    w.flush()
        .map_err(|e| CliError::Io(format!("archive write failed: {e}")))
}

/// A loaded archive: the reconstructed model plus the run-configuration
/// echo.
pub struct LoadedArchive {
    pub model: OsmModel,
    pub run_echo: Vec<(String, String)>,
}

pub fn load_model<R: BufRead>(r: R) -> Result<LoadedArchive, CliError> {
    let mut lines = r.lines().enumerate();
    let header = next_line(&mut lines)?
        .ok_or_else(|| CliError::Parse("empty archive".into()))?;
    let mut head = header.1.split_whitespace();
    let magic = head.next().unwrap_or_default();
    let version: u32 = head
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| CliError::Parse("archive header missing version".into()))?;
    if magic != ARCHIVE_MAGIC {
        return Err(CliError::Parse(format!(
            "not a model archive (header {magic:?})"
        )));
    }
    if version != ARCHIVE_VERSION {
        return Err(CliError::Parse(format!(
            "archive version mismatch: file has version {version}, this build reads {ARCHIVE_VERSION}"
        )));
    }

    let mut model_kv: Vec<(String, String)> = Vec::new();
    let mut run_echo: Vec<(String, String)> = Vec::new();
    let mut src_vocab_lines: Vec<String> = Vec::new();
    let mut tgt_vocab_lines: Vec<String> = Vec::new();
    let mut unit_lines: Vec<String> = Vec::new();
    let mut segment_lines: Vec<String> = Vec::new();
    let mut param_lines: Vec<String> = Vec::new();
    let mut section = String::new();

    while let Some((no, line)) = next_line(&mut lines)? {
        if line.starts_with('[') && line.ends_with(']') {
            section = line[1..line.len() - 1].to_string();
            continue;
        }
        match section.as_str() {
            "model" => model_kv.push(split_kv(&line, no)?),
            "run" => run_echo.push(split_kv(&line, no)?),
            "source_vocab" => src_vocab_lines.push(line),
            "target_vocab" => tgt_vocab_lines.push(line),
            "units" => unit_lines.push(line),
            "segments" => segment_lines.push(line),
            "params" => param_lines.push(line),
            other => {
                return Err(CliError::Parse(format!(
                    "line {no}: content outside a known section ({other:?})"
                )))
            }
        }
    }

    let config = parse_model_section(&model_kv)?;
    let source_vocab = parse_vocab(&src_vocab_lines)?;
    let target_vocab = parse_vocab(&tgt_vocab_lines)?;
    let lexicon = parse_lexicon(config.encoder.unit_mode, &unit_lines, &segment_lines)?;
    let params = parse_params(&param_lines)?;
    let model = OsmModel::from_parts(config, source_vocab, target_vocab, lexicon, params)
        .map_err(|e| CliError::Parse(format!("archive is inconsistent: {e}")))?;
    Ok(LoadedArchive { model, run_echo })
}

pub fn load_model_path(path: &Path) -> Result<LoadedArchive, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    load_model(BufReader::new(file))
}

type NumberedLines<'a, R> = std::iter::Enumerate<std::io::Lines<R>>;

fn next_line<R: BufRead>(
    lines: &mut NumberedLines<'_, R>,
) -> Result<Option<(usize, String)>, CliError> {
    for (idx, line) in lines.by_ref() {
        let line = line.map_err(|e| CliError::Io(format!("archive read failed: {e}")))?;
        if line.is_empty() {
            continue;
        }
        return Ok(Some((idx + 1, line)));
    }
    Ok(None)
}

fn split_kv(line: &str, no: usize) -> Result<(String, String), CliError> {
    let (k, v) = line
        .split_once('=')
        .ok_or_else(|| CliError::Parse(format!("line {no}: expected `key = value`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn parse_model_section(kv: &[(String, String)]) -> Result<ModelConfig, CliError> {
    let get = |key: &str| -> Result<&str, CliError> {
        kv.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CliError::Parse(format!("[model] section missing {key}")))
    };
    let num = |key: &str| -> Result<usize, CliError> {
        get(key)?
            .parse()
            .map_err(|_| CliError::Parse(format!("[model] {key} is not a number")))
    };
    let kind = EncoderKind::parse(get("encoder")?)
        .map_err(|e| CliError::Parse(e.to_string()))?;
    let mode = UnitMode::parse(get("mode")?).map_err(|e| CliError::Parse(e.to_string()))?;
    let mut enc = crate::encoders::EncoderConfig::new(kind, mode);
    enc.word_dim = num("word_dim")?;
    enc.unit_dim = num("unit_dim")?;
    enc.lstm_hidden = num("lstm_hidden")?;
    enc.kernels = parse_kernels(get("kernels")?)?;
    enc.highway_layers = num("highway_layers")?;
    let mut config = ModelConfig::new(enc);
    config.target_dim = num("target_dim")?;
    config.state_dim = num("state_dim")?;
    Ok(config)
}

fn parse_vocab(lines: &[String]) -> Result<Vocabulary, CliError> {
    let mut threshold = None;
    let mut entries = Vec::new();
    for line in lines {
        if let Some(rest) = line.strip_prefix("threshold") {
            let v = rest.trim_start().strip_prefix('=').map(str::trim);
            threshold = Some(
                v.and_then(|v| v.parse().ok())
                    .ok_or_else(|| CliError::Parse("bad vocabulary threshold line".into()))?,
            );
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(id), Some(token), Some(count)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(CliError::Parse(format!(
                "bad vocabulary line {line:?}: expected `id<TAB>token<TAB>count`"
            )));
        };
        let id = if id == "-" {
            None
        } else {
            Some(
                id.parse()
                    .map_err(|_| CliError::Parse(format!("bad vocabulary id {id:?}")))?,
            )
        };
        let count: u64 = count
            .parse()
            .map_err(|_| CliError::Parse(format!("bad vocabulary count {count:?}")))?;
        entries.push((id, token.to_string(), count));
    }
    let threshold =
        threshold.ok_or_else(|| CliError::Parse("vocabulary section missing threshold".into()))?;
    Vocabulary::from_entries(threshold, entries)
        .map_err(|e| CliError::Parse(format!("bad vocabulary section: {e}")))
}

fn parse_lexicon(
    mode: UnitMode,
    unit_lines: &[String],
    segment_lines: &[String],
) -> Result<SegmentationLexicon, CliError> {
    let mut units = Vec::new();
    for (idx, line) in unit_lines.iter().enumerate() {
        let (id, unit) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Parse(format!("bad unit line {line:?}")))?;
        let id: usize = id
            .parse()
            .map_err(|_| CliError::Parse(format!("bad unit id in {line:?}")))?;
        if id != idx {
            return Err(CliError::Parse(format!(
                "unit ids must be dense and ordered; got {id} at position {idx}"
            )));
        }
        units.push(unit.to_string());
    }
    let mut entries = Vec::new();
    for line in segment_lines {
        let (word, rest) = line
            .split_once('\t')
            .ok_or_else(|| CliError::Parse(format!("bad segment line {line:?}")))?;
        entries.push((
            word.to_string(),
            rest.split_whitespace().map(|u| u.to_string()).collect(),
        ));
    }
    SegmentationLexicon::from_parts(mode, units, &entries)
        .map_err(|e| CliError::Parse(format!("bad unit sections: {e}")))
}

fn parse_params(lines: &[String]) -> Result<ParamSet, CliError> {
    if !lines.len().is_multiple_of(2) {
        return Err(CliError::Parse(
            "[params] section must alternate header and value lines".into(),
        ));
    }
    let mut params = ParamSet::new();
    for chunk in lines.chunks(2) {
        let mut head = chunk[0].split_whitespace();
        let name = head
            .next()
            .ok_or_else(|| CliError::Parse("parameter header missing name".into()))?;
        let ndim: usize = head
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CliError::Parse(format!("parameter {name}: bad ndim")))?;
        let dims: Result<Vec<usize>, CliError> = head
            .map(|d| {
                d.parse()
                    .map_err(|_| CliError::Parse(format!("parameter {name}: bad dimension {d:?}")))
            })
            .collect();
        let dims = dims?;
        if dims.len() != ndim {
            return Err(CliError::Parse(format!(
                "parameter {name}: header claims {ndim} dims but lists {}",
                dims.len()
            )));
        }
        let values: Result<Vec<f64>, CliError> = chunk[1]
            .split_whitespace()
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Parse(format!("parameter {name}: bad value {v:?}")))
            })
            .collect();
        let value = Array::from_vec(&dims, values?)
            .map_err(|e| CliError::Parse(format!("parameter {name}: {e}")))?;
        params
            .add(name, value)
            .map_err(|e| CliError::Parse(format!("parameter {name}: {e}")))?;
    }
    Ok(params)
}
