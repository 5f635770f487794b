//! Small trainable classifiers and synthetic tasks that stand in for the
//! victim and suspect model population.

mod linear;
mod mlp;
mod synth;
mod train;
pub mod weights;

pub use linear::LinearClassifier;
pub use mlp::{Activation, Dense, Mlp, MlpSpec};
pub use synth::{generate_task, SyntheticTaskSpec, TaskFamily};
pub use train::{fit, train, train_with_history, LossHistory, LossKind, TrainConfig, Targets};

use crate::error::Result;
use crate::model::ClassifierHandle;

/// Gradient of logit `class` of `h` at `x` with respect to `x`.
pub fn input_gradient(h: &ClassifierHandle, x: &[f64], class: usize) -> Result<Vec<f64>> {
    h.input_gradient(x, class)
}
