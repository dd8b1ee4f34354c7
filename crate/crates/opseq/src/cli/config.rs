use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::UnitMode;
use crate::encoders::{default_kernels, EncoderConfig, EncoderKind, KernelSpec};
use crate::osm::{ModelConfig, TrainConfig};

use super::CliError;

/// Everything a run needs: paths, encoder choice, dimensions, thresholds,
/// the seed, and training settings. Values come from defaults, then an
/// optional `key = value` config file, then command-line flags; flags win.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: Option<PathBuf>,
    pub target: Option<PathBuf>,
    pub alignments: Option<PathBuf>,
    pub dev_source: Option<PathBuf>,
    pub dev_target: Option<PathBuf>,
    pub dev_alignments: Option<PathBuf>,
    pub segmentations: Option<PathBuf>,
    pub tag_lexicon: Option<PathBuf>,
    pub nbest: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    /// A single inline query word, overriding the queries file.
    pub query: Option<String>,
    pub model: Option<PathBuf>,
    pub out_dir: PathBuf,

    pub encoder_kind: EncoderKind,
    pub unit_mode: UnitMode,
    pub word_dim: usize,
    /// Unit embedding dimension; bag mode ties it to `word_dim`.
    pub unit_dim: Option<usize>,
    pub lstm_hidden: usize,
    /// `width:filters` pairs; empty means the default split over widths 1-5.
    pub kernels: Vec<KernelSpec>,
    pub highway_layers: usize,
    pub target_dim: usize,
    pub state_dim: usize,

    pub threshold: u64,
    pub seed: Option<u64>,

    pub learning_rate: f64,
    pub max_epochs: usize,
    pub eval_every: usize,
    pub patience: usize,
    /// Global gradient-norm ceiling; zero disables clipping.
    pub max_grad_norm: f64,

    pub k_neighbors: usize,
    pub top_synonyms: usize,
    /// Gold-synonym queries below this corpus frequency are skipped.
    pub synonym_floor: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            source: None,
            target: None,
            alignments: None,
            dev_source: None,
            dev_target: None,
            dev_alignments: None,
            segmentations: None,
            tag_lexicon: None,
            nbest: None,
            queries: None,
            query: None,
            model: None,
            out_dir: PathBuf::from("out"),
            encoder_kind: EncoderKind::Cnn,
            unit_mode: UnitMode::Char,
            word_dim: 64,
            unit_dim: None,
            lstm_hidden: 64,
            kernels: Vec::new(),
            highway_layers: 1,
            target_dim: 64,
            state_dim: 128,
            threshold: 5,
            seed: None,
            learning_rate: 0.1,
            max_epochs: 50,
            eval_every: 1,
            patience: 1,
            max_grad_norm: 5.0,
            k_neighbors: 20,
            top_synonyms: 5,
            synonym_floor: 5,
        }
    }
}

impl RunConfig {
    /// Apply a `key = value` config file. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Parse(format!(
                    "{}:{}: expected `key = value`, got {raw:?}",
                    path.display(),
                    idx + 1
                ))
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| {
                CliError::Parse(format!("{}:{}: {e}", path.display(), idx + 1))
            })?;
        }
        Ok(())
    }

    /// Set one option by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let path = |v: &str| Some(PathBuf::from(v));
        let bad = |what: &str, v: &str| CliError::Parse(format!("invalid {what}: {v:?}"));
        match key {
            "source" => self.source = path(value),
            "target" => self.target = path(value),
            "alignments" => self.alignments = path(value),
            "dev-source" => self.dev_source = path(value),
            "dev-target" => self.dev_target = path(value),
            "dev-alignments" => self.dev_alignments = path(value),
            "segmentations" => self.segmentations = path(value),
            "tag-lexicon" => self.tag_lexicon = path(value),
            "nbest" => self.nbest = path(value),
            "queries" => self.queries = path(value),
            "query" => self.query = Some(value.to_string()),
            "model" => self.model = path(value),
            "out" => self.out_dir = PathBuf::from(value),
            "encoder" => {
                self.encoder_kind =
                    EncoderKind::parse(value).map_err(|_| bad("encoder kind", value))?
            }
            "mode" => {
                self.unit_mode = UnitMode::parse(value).map_err(|_| bad("unit mode", value))?
            }
            "word-dim" => self.word_dim = parse_num(key, value)?,
            "unit-dim" => self.unit_dim = Some(parse_num(key, value)?),
            "lstm-hidden" => self.lstm_hidden = parse_num(key, value)?,
            "kernels" => self.kernels = parse_kernels(value)?,
            "highway-layers" => self.highway_layers = parse_num(key, value)?,
            "target-dim" => self.target_dim = parse_num(key, value)?,
            "state-dim" => self.state_dim = parse_num(key, value)?,
            "threshold" => self.threshold = parse_num(key, value)?,
            "seed" => self.seed = Some(parse_num(key, value)?),
            "learning-rate" => {
                self.learning_rate = value.parse().map_err(|_| bad("learning-rate", value))?
            }
            "max-epochs" => self.max_epochs = parse_num(key, value)?,
            "eval-every" => self.eval_every = parse_num(key, value)?,
            "patience" => self.patience = parse_num(key, value)?,
            "max-grad-norm" => {
                self.max_grad_norm = value.parse().map_err(|_| bad("max-grad-norm", value))?
            }
            "k" => self.k_neighbors = parse_num(key, value)?,
            "top" => self.top_synonyms = parse_num(key, value)?,
            "synonym-floor" => self.synonym_floor = parse_num(key, value)?,
            other => return Err(CliError::Parse(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// The effective encoder configuration.
    pub fn encoder_config(&self) -> EncoderConfig {
        let mut enc = EncoderConfig::new(self.encoder_kind, self.unit_mode);
        enc.word_dim = self.word_dim;
        enc.unit_dim = match (self.encoder_kind, self.unit_dim) {
            (EncoderKind::Bag, _) => self.word_dim,
            (_, Some(d)) => d,
            (_, None) => 16,
        };
        enc.lstm_hidden = self.lstm_hidden;
        enc.kernels = if self.kernels.is_empty() {
            default_kernels(self.word_dim, 5)
        } else {
            self.kernels.clone()
        };
        enc.highway_layers = self.highway_layers;
        enc
    }

    pub fn model_config(&self) -> ModelConfig {
        let mut config = ModelConfig::new(self.encoder_config());
        config.target_dim = self.target_dim;
        config.state_dim = self.state_dim;
        config
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let seed = self.require_seed()?;
        let mut tc = TrainConfig::new(self.learning_rate, self.max_epochs, seed);
        tc.eval_every = self.eval_every;
        tc.patience = self.patience;
        tc.max_grad_norm = if self.max_grad_norm > 0.0 {
            Some(self.max_grad_norm)
        } else {
            None
        };
        Ok(tc)
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("--seed is required (no wall-clock default)".into()))
    }

    /// Demand that a path option is set and exists on disk.
    pub fn require_path(&self, what: &str, value: &Option<PathBuf>) -> Result<PathBuf, CliError> {
        let p = value
            .clone()
            .ok_or_else(|| CliError::Usage(format!("--{what} is required")))?;
        if !p.exists() {
            return Err(CliError::Usage(format!(
                "--{what}: no such file: {}",
                p.display()
            )));
        }
        Ok(p)
    }

    /// Key/value listing in a fixed order, echoed into model archives.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        let path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        push("source", path(&self.source));
        push("target", path(&self.target));
        push("alignments", path(&self.alignments));
        push("dev-source", path(&self.dev_source));
        push("dev-target", path(&self.dev_target));
        push("dev-alignments", path(&self.dev_alignments));
        push("segmentations", path(&self.segmentations));
        push("encoder", self.encoder_kind.as_str().to_string());
        push("mode", self.unit_mode.as_str().to_string());
        push("word-dim", self.word_dim.to_string());
        push(
            "unit-dim",
            self.encoder_config().unit_dim.to_string(),
        );
        push("lstm-hidden", self.lstm_hidden.to_string());
        push("kernels", render_kernels(&self.encoder_config().kernels));
        push("highway-layers", self.highway_layers.to_string());
        push("target-dim", self.target_dim.to_string());
        push("state-dim", self.state_dim.to_string());
        push("threshold", self.threshold.to_string());
        push(
            "seed",
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
        );
        push("learning-rate", format!("{}", self.learning_rate));
        push("max-epochs", self.max_epochs.to_string());
        push("eval-every", self.eval_every.to_string());
        push("patience", self.patience.to_string());
        push("max-grad-norm", format!("{}", self.max_grad_norm));
        out
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Parse(format!("invalid {key}: {value:?}")))
}

/// Parse `width:filters` pairs separated by spaces or commas.
pub fn parse_kernels(value: &str) -> Result<Vec<KernelSpec>, CliError> {
    let mut out = Vec::new();
    for part in value.split([' ', ',']).filter(|p| !p.is_empty()) {
        let (w, f) = part
            .split_once(':')
            .ok_or_else(|| CliError::Parse(format!("kernel spec must be width:filters, got {part:?}")))?;
        out.push(KernelSpec {
            width: parse_num("kernel width", w)?,
            filters: parse_num("kernel filters", f)?,
        });
    }
    Ok(out)
}

pub fn render_kernels(kernels: &[KernelSpec]) -> String {
    kernels
        .iter()
        .map(|k| format!("{}:{}", k.width, k.filters))
        .collect::<Vec<_>>()
        .join(" ")
}
