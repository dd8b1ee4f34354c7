use std::collections::HashMap;

use super::array::{Array, NumError};
use super::rng::Rng;

/// Initialization range for weight matrices and embeddings.
pub const INIT_RANGE: f64 = 0.08;

/// Handle to a parameter inside a [`ParamSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

/// A named trainable array paired with its gradient accumulator.
#[derive(Debug, Clone)]
pub struct Parameter {
    name: String,
    value: Array,
    grad: Array,
}

impl Parameter {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> &Array {
        &self.value
    }

    pub fn grad(&self) -> &Array {
        &self.grad
    }
}

/// The full set of trainable parameters of a model.
///
/// Parameters keep their insertion order, which fixes both the
/// initialization draw order and the serialization order.
#[derive(Debug, Clone, Default)]
pub struct ParamSet {
    items: Vec<Parameter>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> ParamSet {
        ParamSet::default()
    }

    pub fn add(&mut self, name: &str, value: Array) -> Result<ParamId, NumError> {
        if self.index.contains_key(name) {
            return Err(NumError::Argument(format!("duplicate parameter {name:?}")));
        }
        let grad = Array::zeros(value.shape());
        let id = self.items.len();
        self.index.insert(name.to_string(), id);
        self.items.push(Parameter {
            name: name.to_string(),
            value,
            grad,
        });
        Ok(ParamId(id))
    }

    /// Weight initialization: uniform in `(-INIT_RANGE, INIT_RANGE)`.
    pub fn add_uniform(
        &mut self,
        name: &str,
        shape: &[usize],
        rng: &mut Rng,
    ) -> Result<ParamId, NumError> {
        let mut value = Array::zeros(shape);
        for v in value.data_mut() {
            *v = rng.uniform(-INIT_RANGE, INIT_RANGE);
        }
        self.add(name, value)
    }

    /// Bias initialization: zeros.
    pub fn add_zeros(&mut self, name: &str, shape: &[usize]) -> Result<ParamId, NumError> {
        self.add(name, Array::zeros(shape))
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.index.get(name).copied().map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.items[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Array {
        &self.items[id.0].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Array {
        &mut self.items[id.0].value
    }

    pub fn grad(&self, id: ParamId) -> &Array {
        &self.items[id.0].grad
    }

    pub fn accumulate_grad(&mut self, id: ParamId, delta: &[f64]) {
        let g = self.items[id.0].grad.data_mut();
        debug_assert_eq!(g.len(), delta.len());
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    pub fn accumulate_grad_row(&mut self, id: ParamId, row: usize, delta: &[f64]) {
        let grad = &mut self.items[id.0].grad;
        let cols = grad.cols();
        debug_assert_eq!(cols, delta.len());
        let g = &mut grad.data_mut()[row * cols..(row + 1) * cols];
        for (gi, di) in g.iter_mut().zip(delta) {
            *gi += di;
        }
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.items {
            p.grad.fill(0.0);
        }
    }

    /// Global L2 norm over all gradients.
    pub fn grad_norm(&self) -> f64 {
        self.items
            .iter()
            .flat_map(|p| p.grad.data())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.items {
            for g in p.grad.data_mut() {
                *g *= factor;
            }
        }
    }

    /// One step of stochastic gradient descent: `value -= lr * grad` for
    /// every parameter, then gradients are cleared. A zero learning rate is
    /// the identity on values; negative or non-finite rates are rejected.
    pub fn sgd_step(&mut self, lr: f64) -> Result<(), NumError> {
        if !lr.is_finite() || lr < 0.0 {
            return Err(NumError::Argument(format!(
                "learning rate must be finite and non-negative, got {lr}"
            )));
        }
        for p in &mut self.items {
            let (value, grad) = (&mut p.value, &mut p.grad);
            for (v, g) in value.data_mut().iter_mut().zip(grad.data()) {
                *v -= lr * g;
            }
            grad.fill(0.0);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Total number of scalar entries across all parameters.
    pub fn entry_count(&self) -> usize {
        self.items.iter().map(|p| p.value.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.items.iter()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.items.len()).map(ParamId)
    }

    /// Copy all values from `other`, which must have identical layout.
    pub fn copy_values_from(&mut self, other: &ParamSet) {
        debug_assert_eq!(self.items.len(), other.items.len());
        for (mine, theirs) in self.items.iter_mut().zip(other.items.iter()) {
            debug_assert_eq!(mine.name, theirs.name);
            mine.value = theirs.value.clone();
        }
    }
}
