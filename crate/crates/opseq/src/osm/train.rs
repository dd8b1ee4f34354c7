use crate::corpus::{OperationSequence, SourceWord};
use crate::numkit::{Graph, Rng};

use super::model::{ModelError, OsmModel};

/// A training or evaluation item: a prepared source sentence and its
/// operation sequence.
#[derive(Debug, Clone)]
pub struct Example {
    pub source: Vec<SourceWord>,
    pub ops: OperationSequence,
}

/// Training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
    /// Evaluate the development likelihood every this many epochs.
    pub eval_every: usize,
    /// Number of consecutive non-improving evaluations tolerated before
    /// stopping. With patience 1 the first non-improvement stops training;
    /// with more, each non-improvement halves the learning rate first.
    pub patience: usize,
    /// Global L2 gradient-norm ceiling per sentence; `None` disables
    /// clipping. Per-sentence SGD on recurrent losses overshoots without it
    /// when embeddings are heavily shared.
    pub max_grad_norm: Option<f64>,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, max_epochs: usize, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate,
            max_epochs,
            seed,
            eval_every: 1,
            patience: 1,
            max_grad_norm: Some(5.0),
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(ModelError::Argument(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.max_epochs == 0 || self.eval_every == 0 || self.patience == 0 {
            return Err(ModelError::Argument(
                "max_epochs, eval_every, and patience must be positive".into(),
            ));
        }
        if let Some(limit) = self.max_grad_norm {
            if limit.is_nan() || limit <= 0.0 {
                return Err(ModelError::Argument(format!(
                    "max_grad_norm must be positive, got {limit}"
                )));
            }
        }
        Ok(())
    }
}

/// What the early stopper decided after one development evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    /// New best likelihood; training continues.
    Improved,
    /// Non-improving evaluation within the patience budget; the learning
    /// rate halves and training continues.
    Strike,
    /// Patience exhausted: stop and keep the parameters of `best_epoch`.
    Stop { best_epoch: usize },
}

/// Development-likelihood early stopping: training stops as soon as the
/// likelihood fails to improve `patience` times in a row, and the
/// best-evaluation parameters are kept.
#[derive(Debug, Clone)]
pub struct EarlyStopper {
    best: f64,
    best_epoch: usize,
    strikes: usize,
    patience: usize,
}

impl EarlyStopper {
    pub fn new(patience: usize) -> EarlyStopper {
        EarlyStopper {
            best: f64::NEG_INFINITY,
            best_epoch: 0,
            strikes: 0,
            patience,
        }
    }

    pub fn observe(&mut self, epoch: usize, dev_log_likelihood: f64) -> StopDecision {
        if dev_log_likelihood > self.best {
            self.best = dev_log_likelihood;
            self.best_epoch = epoch;
            self.strikes = 0;
            StopDecision::Improved
        } else {
            self.strikes += 1;
            if self.strikes >= self.patience {
                StopDecision::Stop {
                    best_epoch: self.best_epoch,
                }
            } else {
                StopDecision::Strike
            }
        }
    }

    pub fn best(&self) -> (usize, f64) {
        (self.best_epoch, self.best)
    }
}

/// One line of the training log.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sentence negative log-likelihood over the epoch.
    pub train_loss: f64,
    /// Total development log-likelihood, when evaluated this epoch.
    pub dev_log_likelihood: Option<f64>,
    pub learning_rate: f64,
}

/// Why training ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    DevLikelihoodStopped,
    MaxEpochs,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::DevLikelihoodStopped => "dev-likelihood-stopped",
            StopReason::MaxEpochs => "max-epochs",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    pub stop_reason: StopReason,
    pub best_epoch: usize,
    pub best_dev_log_likelihood: f64,
}

/// Per-sentence SGD on the negative joint log-likelihood with seeded
/// shuffling and dev-likelihood early stopping. The model is left holding
/// the parameters of its best development evaluation. Deterministic given
/// the seed.
pub fn train(
    model: &mut OsmModel,
    train_set: &[Example],
    dev_set: &[Example],
    config: &TrainConfig,
) -> Result<TrainReport, ModelError> {
    config.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(ModelError::Argument(
            "training and development sets must be non-empty".into(),
        ));
    }

    let mut rng = Rng::new(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut lr = config.learning_rate;
    let mut stopper = EarlyStopper::new(config.patience);
    let mut best_params = model.params.clone();
    let mut epochs = Vec::new();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=config.max_epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for &idx in &order {
            let example = &train_set[idx];
            let mut g = Graph::new();
            let loss = model
                .spec
                .build_loss(&mut g, &model.params, &example.source, &example.ops)?;
            let loss_value = g.scalar_value(loss);
            if !loss_value.is_finite() {
                return Err(ModelError::Diverged {
                    epoch,
                    sentence: idx,
                    message: format!("loss became {loss_value}"),
                });
            }
            loss_sum += loss_value;
            g.backward(loss, &mut model.params)?;
            if let Some(limit) = config.max_grad_norm {
                let norm = model.params.grad_norm();
                if norm > limit {
                    model.params.scale_grads(limit / norm);
                }
            }
            model.params.sgd_step(lr)?;
        }
        let train_loss = loss_sum / train_set.len() as f64;

        let mut record = EpochRecord {
            epoch,
            train_loss,
            dev_log_likelihood: None,
            learning_rate: lr,
        };
        if epoch % config.eval_every == 0 {
            let dev_ll = total_log_likelihood(model, dev_set)?;
            record.dev_log_likelihood = Some(dev_ll);
            match stopper.observe(epoch, dev_ll) {
                StopDecision::Improved => {
                    best_params.copy_values_from(&model.params);
                }
                StopDecision::Strike => {
                    lr /= 2.0;
                }
                StopDecision::Stop { .. } => {
                    epochs.push(record);
                    stop_reason = StopReason::DevLikelihoodStopped;
                    break;
                }
            }
        }
        epochs.push(record);
    }

    model.params.copy_values_from(&best_params);
    let (best_epoch, best_dev) = stopper.best();
    Ok(TrainReport {
        epochs,
        stop_reason,
        best_epoch,
        best_dev_log_likelihood: best_dev,
    })
}

/// Total joint log-likelihood of a set under the current parameters.
pub fn total_log_likelihood(model: &OsmModel, set: &[Example]) -> Result<f64, ModelError> {
    let mut total = 0.0;
    for example in set {
        let score = model
            .spec
            .score_sequence(&model.params, &example.source, &example.ops)?;
        total += score.total();
    }
    Ok(total)
}
