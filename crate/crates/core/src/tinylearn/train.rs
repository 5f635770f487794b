//! Mini-batch SGD with deterministic shuffling.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::mlp::{Grads, Mlp, MlpSpec};
use crate::error::{Error, Result};
use crate::model::{softmax, LabeledDataset};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    /// KL divergence from soft targets to the model's softmax (temperature 1).
    DistillationKl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default)]
    pub weight_decay: f64,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
}

fn default_loss() -> LossKind {
    LossKind::CrossEntropy
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
            weight_decay: 0.0,
            loss: LossKind::CrossEntropy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be finite and non-negative".into()));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}

/// Training targets: hard labels or per-point class distributions.
#[derive(Debug, Clone)]
pub enum Targets {
    Hard(Vec<usize>),
    Soft(Vec<Vec<f64>>),
}

impl Targets {
    fn len(&self) -> usize {
        match self {
            Targets::Hard(v) => v.len(),
            Targets::Soft(v) => v.len(),
        }
    }
}

/// Mean per-epoch training loss, first epoch first.
pub type LossHistory = Vec<f64>;

/// Runs SGD on `model` in place.
///
/// The per-sample gradient of both losses w.r.t. the logits is `softmax − target`;
/// they differ only in the reported value (cross-entropy vs. KL, which
/// subtracts the target entropy).
pub fn fit(
    model: &mut Mlp,
    points: &[Vec<f64>],
    targets: &Targets,
    cfg: &TrainConfig,
    shuffle_seed: u64,
) -> Result<LossHistory> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyEvaluationSet);
    }
    assert_eq!(points.len(), targets.len(), "points and targets differ in length");
    let in_dim = model.layers()[0].in_dim;
    if let Some(p) = points.iter().find(|p| p.len() != in_dim) {
        return Err(Error::DimensionMismatch {
            expected: in_dim,
            actual: p.len(),
        });
    }
    let c = model.layers().last().unwrap().out_dim;
    let mut rng = seed::rng(shuffle_seed);
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut grads = Grads::zeros_like(model);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut dlogits = vec![0.0; c];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            for &i in batch {
                let trace = model.trace(&points[i]);
                let logits = trace.logits();
                let q = softmax(logits);
                let lse = log_sum_exp(logits);
                match targets {
                    Targets::Hard(labels) => {
                        let y = labels[i];
                        epoch_loss += lse - logits[y];
                        dlogits.copy_from_slice(&q);
                        dlogits[y] -= 1.0;
                    }
                    Targets::Soft(dist) => {
                        let p = &dist[i];
                        for k in 0..c {
                            if p[k] > 0.0 {
                                let ce = p[k] * (lse - logits[k]);
                                epoch_loss += match cfg.loss {
                                    LossKind::CrossEntropy => ce,
                                    LossKind::DistillationKl => ce + p[k] * p[k].ln(),
                                };
                            }
                            dlogits[k] = q[k] - p[k];
                        }
                    }
                }
                model.backward(&trace, &dlogits, Some(&mut grads));
            }
            if !epoch_loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            let scale = 1.0 / batch.len() as f64;
            let lr = cfg.learning_rate;
            if lr == 0.0 {
                continue;
            }
            for (layer, g) in model.layers_mut().iter_mut().zip(&grads.layers) {
                for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                    *w -= lr * (gw * scale + cfg.weight_decay * *w);
                }
                for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                    *b -= lr * gb * scale;
                }
            }
        }
        let mean = epoch_loss / points.len() as f64;
        if !mean.is_finite() || model.layers().iter().any(|l| l.weights.iter().any(|w| !w.is_finite())) {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(mean);
    }
    Ok(history)
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_arch(dataset: &LabeledDataset, arch: &MlpSpec) -> Result<()> {
    arch.validate()?;
    if arch.input_dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: arch.input_dim(),
            actual: dataset.dim(),
        });
    }
    if arch.num_classes() != dataset.num_classes() {
        return Err(Error::IncompatibleTask(format!(
            "architecture has {} outputs, dataset has {} classes",
            arch.num_classes(),
            dataset.num_classes()
        )));
    }
    Ok(())
}

/// Trains a fresh network on `dataset`'s labels. Deterministic in `(dataset, arch, cfg)`.
pub fn train(dataset: &LabeledDataset, arch: &MlpSpec, cfg: &TrainConfig) -> Result<Mlp> {
    train_with_history(dataset, arch, cfg).map(|(m, _)| m)
}

pub fn train_with_history(dataset: &LabeledDataset, arch: &MlpSpec, cfg: &TrainConfig) -> Result<(Mlp, LossHistory)> {
    check_arch(dataset, arch)?;
    let mut model = Mlp::init(arch)?;
    let history = fit(
        &mut model,
        dataset.points(),
        &Targets::Hard(dataset.labels().to_vec()),
        cfg,
        seed::derive(arch.seed, &[seed::label("shuffle")]),
    )?;
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Split;
    use crate::tinylearn::Activation;

    fn xor_like() -> LabeledDataset {
        let pts = vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]];
        LabeledDataset::new(2, 2, pts, vec![0, 1, 1, 0], Split::Train).unwrap()
    }

    #[test]
    fn zero_learning_rate_keeps_initial_weights() {
        let d = xor_like();
        let arch = MlpSpec::new(2, &[4], 2, Activation::Tanh, 3);
        let cfg = TrainConfig {
            learning_rate: 0.0,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert_eq!(train(&d, &arch, &cfg).unwrap(), Mlp::init(&arch).unwrap());
    }

    #[test]
    fn same_arguments_give_identical_weights() {
        let d = xor_like();
        let arch = MlpSpec::new(2, &[8], 2, Activation::Relu, 9);
        let cfg = TrainConfig {
            batch_size: 2,
            ..TrainConfig::default()
        };
        assert_eq!(train(&d, &arch, &cfg).unwrap(), train(&d, &arch, &cfg).unwrap());
    }

    #[test]
    fn rejects_mismatched_architecture() {
        let d = xor_like();
        assert!(matches!(
            train(&d, &MlpSpec::new(3, &[4], 2, Activation::Relu, 0), &TrainConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            train(&d, &MlpSpec::new(2, &[4], 3, Activation::Relu, 0), &TrainConfig::default()),
            Err(Error::IncompatibleTask(_))
        ));
    }

    #[test]
    fn non_finite_inputs_report_divergence() {
        let mut pts: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64, 1.0]).collect();
        pts[17][0] = f64::NAN;
        let ys = (0..64).map(|i| i % 2).collect();
        let d = LabeledDataset::new(2, 2, pts, ys, Split::Train).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1.0,
            epochs: 5,
            ..TrainConfig::default()
        };
        let r = train(&d, &MlpSpec::new(2, &[16], 2, Activation::Tanh, 1), &cfg);
        assert!(matches!(r, Err(Error::TrainingDiverged { .. })), "{r:?}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let d = xor_like();
        let arch = MlpSpec::new(2, &[4], 2, Activation::Relu, 0);
        for cfg in [
            TrainConfig { epochs: 0, ..TrainConfig::default() },
            TrainConfig { batch_size: 0, ..TrainConfig::default() },
            TrainConfig { learning_rate: -1.0, ..TrainConfig::default() },
        ] {
            assert!(matches!(train(&d, &arch, &cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
