//! Dense-array numeric core: reverse-mode differentiation over small `f64`
//! arrays, the layer primitives the encoders and the translation model are
//! built from, SGD, and a finite-difference gradient checker.

mod array;
mod check;
mod graph;
mod params;
mod rng;

pub use array::{log_sum_exp, softmax, Array, NumError};
pub use check::{grad_check, GRAD_CHECK_TOLERANCE, REL_ERR_FLOOR};
pub use graph::{Graph, LstmGates, NodeRef, MASKED_LOG_PROB};
pub use params::{ParamId, ParamSet, Parameter, INIT_RANGE};
pub use rng::Rng;
