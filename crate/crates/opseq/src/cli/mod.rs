//! Command-line surface: run configuration, the model archive format, and
//! the subcommands tying ingestion, training, and evaluation together.
//!
//! Exit codes: 0 on success, 2 for usage and parse problems, 3 for numeric
//! failures (training divergence, failed gradient checks).

pub mod archive;
pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::numkit::NumError;
use crate::osm::ModelError;

pub use archive::{load_model, load_model_path, save_model, save_model_path, LoadedArchive};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Parse(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        match e {
            CorpusError::Io { .. } => CliError::Io(e.to_string()),
            other => CliError::Parse(other.to_string()),
        }
    }
}

impl From<NumError> for CliError {
    fn from(e: NumError) -> CliError {
        CliError::Numeric(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> CliError {
        match e {
            ModelError::Corpus(c) => c.into(),
            ModelError::OpsMismatch(m) => CliError::Parse(m),
            ModelError::Argument(m) => CliError::Usage(m),
            other => CliError::Numeric(other.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        match e {
            EvalError::Argument(m) => CliError::Usage(m),
            EvalError::Parse { .. } => CliError::Parse(e.to_string()),
            EvalError::Model(m) => CliError::Numeric(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "opseq",
    version,
    about = "Hard-attention operation-sequence translation model with sub-word source encoders"
)]
struct Cli {
    /// Flat `key = value` config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for initialization and shuffling (required where randomness is
    /// used; there is no wall-clock default).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct CommonArgs {
    /// Tokenized source corpus, one sentence per line.
    #[arg(long)]
    source: Option<PathBuf>,
    /// Tokenized target corpus, matched line by line.
    #[arg(long)]
    target: Option<PathBuf>,
    /// Pharaoh-format alignments (`i-j` pairs, 0-based, source-target).
    #[arg(long)]
    alignments: Option<PathBuf>,
    #[arg(long)]
    dev_source: Option<PathBuf>,
    #[arg(long)]
    dev_target: Option<PathBuf>,
    #[arg(long)]
    dev_alignments: Option<PathBuf>,
    /// Morpheme analyses: `word<TAB>unit unit` per line (morph mode).
    #[arg(long)]
    segmentations: Option<PathBuf>,
    /// Tag lexicon: `word<TAB>lemmas<TAB>bitstrings` per line.
    #[arg(long)]
    tag_lexicon: Option<PathBuf>,
    /// N-best candidates: `sent_id ||| tokens ||| alignment` per line.
    #[arg(long)]
    nbest: Option<PathBuf>,
    /// Query words, one per line.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// A single query word.
    #[arg(long)]
    query: Option<String>,
    /// A saved model archive.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Encoder kind: word, bag, bilstm, or cnn.
    #[arg(long)]
    encoder: Option<String>,
    /// Sub-word unit mode: char or morph.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    word_dim: Option<usize>,
    #[arg(long)]
    unit_dim: Option<usize>,
    #[arg(long)]
    lstm_hidden: Option<usize>,
    /// Convolution kernels as `width:filters` pairs, e.g. `1:12,2:12`.
    #[arg(long)]
    kernels: Option<String>,
    #[arg(long)]
    highway_layers: Option<usize>,
    #[arg(long)]
    target_dim: Option<usize>,
    #[arg(long)]
    state_dim: Option<usize>,
    /// UNK frequency threshold.
    #[arg(long)]
    threshold: Option<u64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Gradient-norm ceiling per sentence (0 disables clipping).
    #[arg(long)]
    max_grad_norm: Option<f64>,
    /// Neighbour count for intrinsic evaluation.
    #[arg(long)]
    k: Option<usize>,
    /// Gold synonym count from pivoting.
    #[arg(long)]
    top: Option<usize>,
    /// Frequency floor for synonym queries.
    #[arg(long)]
    synonym_floor: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build source and target vocabularies.
    Vocab(CommonArgs),
    /// Segment the source vocabulary into sub-word units.
    Segment(CommonArgs),
    /// Convert aligned sentence pairs into operation sequences.
    Ops(CommonArgs),
    /// Train a model with early stopping on development likelihood.
    Train(CommonArgs),
    /// Word and alignment perplexities of a trained model.
    Ppl(CommonArgs),
    /// Score n-best candidates with the two sequence log-probability terms.
    Score(CommonArgs),
    /// Cosine nearest neighbours of query words.
    Neighbors(CommonArgs),
    /// Pivot-synonym gold sets and multi-label accuracy per frequency band.
    Synonyms(CommonArgs),
    /// Tag and lemma similarity of neighbours per frequency band.
    Morphsim(CommonArgs),
    /// Check model gradients against finite differences on a built-in
    /// fixture.
    Gradcheck(CommonArgs),
}

fn merge(cfg: &mut RunConfig, args: &CommonArgs) -> Result<(), CliError> {
    macro_rules! put {
        ($field:ident, $key:literal) => {
            if let Some(v) = &args.$field {
                cfg.set($key, &v.to_string())?;
            }
        };
    }
    macro_rules! put_path {
        ($field:ident, $key:literal) => {
            if let Some(v) = &args.$field {
                cfg.set($key, &v.display().to_string())?;
            }
        };
    }
    put_path!(source, "source");
    put_path!(target, "target");
    put_path!(alignments, "alignments");
    put_path!(dev_source, "dev-source");
    put_path!(dev_target, "dev-target");
    put_path!(dev_alignments, "dev-alignments");
    put_path!(segmentations, "segmentations");
    put_path!(tag_lexicon, "tag-lexicon");
    put_path!(nbest, "nbest");
    put_path!(queries, "queries");
    put_path!(model, "model");
    put!(query, "query");
    put!(encoder, "encoder");
    put!(mode, "mode");
    put!(word_dim, "word-dim");
    put!(unit_dim, "unit-dim");
    put!(lstm_hidden, "lstm-hidden");
    put!(kernels, "kernels");
    put!(highway_layers, "highway-layers");
    put!(target_dim, "target-dim");
    put!(state_dim, "state-dim");
    put!(threshold, "threshold");
    put!(learning_rate, "learning-rate");
    put!(max_epochs, "max-epochs");
    put!(eval_every, "eval-every");
    put!(patience, "patience");
    put!(max_grad_norm, "max-grad-norm");
    put!(k, "k");
    put!(top, "top");
    put!(synonym_floor, "synonym-floor");
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    let args = match &cli.command {
        Command::Vocab(a)
        | Command::Segment(a)
        | Command::Ops(a)
        | Command::Train(a)
        | Command::Ppl(a)
        | Command::Score(a)
        | Command::Neighbors(a)
        | Command::Synonyms(a)
        | Command::Morphsim(a)
        | Command::Gradcheck(a) => a,
    };
    merge(&mut cfg, args)?;
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    match &cli.command {
        Command::Vocab(_) => commands::cmd_vocab(&cfg),
        Command::Segment(_) => commands::cmd_segment(&cfg),
        Command::Ops(_) => commands::cmd_ops(&cfg),
        Command::Train(_) => commands::cmd_train(&cfg),
        Command::Ppl(_) => commands::cmd_ppl(&cfg),
        Command::Score(_) => commands::cmd_score(&cfg),
        Command::Neighbors(_) => commands::cmd_neighbors(&cfg),
        Command::Synonyms(_) => commands::cmd_synonyms(&cfg),
        Command::Morphsim(_) => commands::cmd_morphsim(&cfg),
        Command::Gradcheck(_) => commands::cmd_gradcheck(&cfg),
    }
}

/// Entry point for the binary: returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
