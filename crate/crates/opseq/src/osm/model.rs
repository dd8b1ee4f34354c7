use thiserror::Error;

use crate::corpus::{CorpusError, SegmentationLexicon, TokenId, Vocabulary};
use crate::encoders::{EncoderConfig, EncoderParams};
use crate::numkit::{Array, NumError, ParamId, ParamSet, Rng};

use super::features::JUMP_FEATURE_DIM;

/// Errors raised by model construction, scoring, and training.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("operations disagree with the sentence pair: {0}")]
    OpsMismatch(String),
    #[error("training diverged at epoch {epoch}, sentence {sentence}: {message}")]
    Diverged {
        epoch: usize,
        sentence: usize,
        message: String,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
}

/// Dimensions of the translation model around a chosen encoder.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    /// Target embedding dimension.
    pub target_dim: usize,
    /// Recurrent state dimension.
    pub state_dim: usize,
}

impl ModelConfig {
    pub fn new(encoder: EncoderConfig) -> ModelConfig {
        ModelConfig {
            encoder,
            target_dim: 64,
            state_dim: 128,
        }
    }

    pub fn validate(&self) -> Result<(), NumError> {
        self.encoder.validate()?;
        if self.target_dim == 0 || self.state_dim == 0 {
            return Err(NumError::Argument("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

/// Handles to the translation-model parameters.
pub struct OsmParamIds {
    /// Target embedding table `[V_T, target_dim]`, UNK and START included.
    pub tgt_emb: ParamId,
    pub enc: EncoderParams,
    /// State-update MLP `[state_dim, state_dim + target_dim + word_dim]`.
    pub state_w: ParamId,
    pub state_b: ParamId,
    /// Output affine `[V_T, state_dim]` over target words.
    pub out_w: ParamId,
    pub out_b: ParamId,
    /// Alignment logit contribution of the state: `[word_dim, state_dim]`.
    pub w_state_align: ParamId,
    /// Alignment logit contribution of the emitted word: `[word_dim, target_dim]`.
    pub w_word_align: ParamId,
    /// Jump-feature weights `[8]`.
    pub b_feat: ParamId,
    /// Learned initial state `[state_dim]`.
    pub h0: ParamId,
}

/// Everything about a model except its parameter values: configuration,
/// vocabularies, the segmentation lexicon, and parameter handles.
pub struct ModelSpec {
    pub config: ModelConfig,
    pub source_vocab: Vocabulary,
    pub target_vocab: Vocabulary,
    pub lexicon: SegmentationLexicon,
    pub ids: OsmParamIds,
}

/// A trainable translation model: spec plus parameter values.
pub struct OsmModel {
    pub spec: ModelSpec,
    pub params: ParamSet,
}

fn init_ids(
    params: &mut ParamSet,
    config: &ModelConfig,
    source_vocab_size: usize,
    target_vocab_size: usize,
    unit_count: usize,
    rng: &mut Rng,
) -> Result<OsmParamIds, NumError> {
    let tgt_emb = params.add_uniform("tgt.emb", &[target_vocab_size, config.target_dim], rng)?;
    let enc = EncoderParams::init(params, &config.encoder, source_vocab_size, unit_count, rng)?;
    let state_in = config.state_dim + config.target_dim + config.encoder.word_dim;
    let state_w = params.add_uniform("osm.state_w", &[config.state_dim, state_in], rng)?;
    let state_b = params.add_zeros("osm.state_b", &[config.state_dim])?;
    let out_w = params.add_uniform("osm.out_w", &[target_vocab_size, config.state_dim], rng)?;
    let out_b = params.add_zeros("osm.out_b", &[target_vocab_size])?;
    let w_state_align =
        params.add_uniform("osm.w_state_align", &[config.encoder.word_dim, config.state_dim], rng)?;
    let w_word_align =
        params.add_uniform("osm.w_word_align", &[config.encoder.word_dim, config.target_dim], rng)?;
    let b_feat = params.add_uniform("osm.b_feat", &[JUMP_FEATURE_DIM], rng)?;
    let h0 = params.add_uniform("osm.h0", &[config.state_dim], rng)?;
    Ok(OsmParamIds {
        tgt_emb,
        enc,
        state_w,
        state_b,
        out_w,
        out_b,
        w_state_align,
        w_word_align,
        b_feat,
        h0,
    })
}

fn resolve_ids(params: &ParamSet, config: &ModelConfig) -> Result<OsmParamIds, NumError> {
    let id = |name: &str| {
        params
            .id(name)
            .ok_or_else(|| NumError::Argument(format!("missing parameter {name}")))
    };
    Ok(OsmParamIds {
        tgt_emb: id("tgt.emb")?,
        enc: EncoderParams::resolve(params, &config.encoder)?,
        state_w: id("osm.state_w")?,
        state_b: id("osm.state_b")?,
        out_w: id("osm.out_w")?,
        out_b: id("osm.out_b")?,
        w_state_align: id("osm.w_state_align")?,
        w_word_align: id("osm.w_word_align")?,
        b_feat: id("osm.b_feat")?,
        h0: id("osm.h0")?,
    })
}

impl OsmModel {
    /// Build a freshly initialized model. Weight matrices and embeddings are
    /// drawn uniformly, biases start at zero, and the draw order is fixed by
    /// the parameter creation order, so a seed fully determines the values.
    pub fn init(
        config: ModelConfig,
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        lexicon: SegmentationLexicon,
        seed: u64,
    ) -> Result<OsmModel, ModelError> {
        config.validate()?;
        let mut rng = Rng::new(seed);
        let mut params = ParamSet::new();
        let ids = init_ids(
            &mut params,
            &config,
            source_vocab.size(),
            target_vocab.size(),
            lexicon.unit_count(),
            &mut rng,
        )?;
        let spec = ModelSpec {
            config,
            source_vocab,
            target_vocab,
            lexicon,
            ids,
        };
        let model = OsmModel { spec, params };
        model.validate_shapes()?;
        Ok(model)
    }

    /// Rebuild a model around existing parameter values (an archive load).
    pub fn from_parts(
        config: ModelConfig,
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        lexicon: SegmentationLexicon,
        params: ParamSet,
    ) -> Result<OsmModel, ModelError> {
        config.validate()?;
        let ids = resolve_ids(&params, &config)?;
        let spec = ModelSpec {
            config,
            source_vocab,
            target_vocab,
            lexicon,
            ids,
        };
        let model = OsmModel { spec, params };
        model.validate_shapes()?;
        Ok(model)
    }

    fn validate_shapes(&self) -> Result<(), ModelError> {
        let c = &self.spec.config;
        let ids = &self.spec.ids;
        let expect = |id: ParamId, shape: &[usize]| -> Result<(), ModelError> {
            let got = self.params.value(id).shape();
            if got != shape {
                return Err(ModelError::Argument(format!(
                    "parameter {} has shape {got:?}, expected {shape:?}",
                    self.params.get(id).name()
                )));
            }
            Ok(())
        };
        expect(ids.tgt_emb, &[self.spec.target_vocab.size(), c.target_dim])?;
        expect(
            ids.enc.word_emb,
            &[self.spec.source_vocab.size(), c.encoder.word_dim],
        )?;
        if let Some(unit_emb) = ids.enc.unit_emb {
            expect(unit_emb, &[self.spec.lexicon.unit_count(), c.encoder.unit_dim])?;
        }
        let state_in = c.state_dim + c.target_dim + c.encoder.word_dim;
        expect(ids.state_w, &[c.state_dim, state_in])?;
        expect(ids.state_b, &[c.state_dim])?;
        expect(ids.out_w, &[self.spec.target_vocab.size(), c.state_dim])?;
        expect(ids.out_b, &[self.spec.target_vocab.size()])?;
        expect(ids.w_state_align, &[c.encoder.word_dim, c.state_dim])?;
        expect(ids.w_word_align, &[c.encoder.word_dim, c.target_dim])?;
        expect(ids.b_feat, &[JUMP_FEATURE_DIM])?;
        expect(ids.h0, &[c.state_dim])?;
        Ok(())
    }
}

/// The decoder's running state during scoring.
#[derive(Debug, Clone)]
pub struct DecoderState {
    pub h: Array,
    /// Previously emitted target word; START initially.
    pub last_word: TokenId,
    /// Last real source position; 0 before any real alignment, unchanged by
    /// NULL steps.
    pub last_real_pos: usize,
}
