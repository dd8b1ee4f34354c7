//! The hard-attention translation model: jump features, alignment and word
//! distributions, teacher-forced sequence scoring, SGD training with
//! dev-likelihood early stopping, and n-best feature scoring.

mod features;
mod model;
mod score;
mod train;

pub use features::{jump_features, JUMP_FEATURE_DIM};
pub use model::{DecoderState, ModelConfig, ModelError, ModelSpec, OsmModel, OsmParamIds};
pub use score::{ScoreNodes, SequenceScore};
pub use train::{
    total_log_likelihood, train, EarlyStopper, EpochRecord, Example, StopDecision, StopReason,
    TrainConfig, TrainReport,
};
