//! Output-side obfuscation wrappers.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::model::{argmax, AccessLevel, Classifier, ClassifierHandle};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NoiseMode {
    /// Expose only the `k` most likely labels.
    TopKOnly { k: usize },
    /// Add uniform noise in `[−scale, scale]` to each probit and renormalise.
    /// The noise is a fixed function of `(seed, x)`.
    ProbitPerturbation { scale: f64, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct OutputNoise {
    inner: ClassifierHandle,
    mode: NoiseMode,
}

impl OutputNoise {
    pub fn new(inner: ClassifierHandle, mode: NoiseMode) -> Self {
        Self { inner, mode }
    }

    pub fn mode(&self) -> NoiseMode {
        self.mode
    }

    /// Wraps `inner` into a new handle.
    pub fn wrap(inner: &ClassifierHandle, mode: NoiseMode) -> ClassifierHandle {
        let id = format!("{}+noise", inner.id());
        ClassifierHandle::new(id, Self::new(inner.clone(), mode))
    }

    fn clean_probits(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.inner.inner().probits(x)
    }
}

impl Classifier for OutputNoise {
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    fn access(&self) -> AccessLevel {
        let inner = self.inner.access();
        let cap = match self.mode {
            NoiseMode::TopKOnly { k } => AccessLevel::TopK { k },
            NoiseMode::ProbitPerturbation { .. } => AccessLevel::Probits,
        };
        if inner.permits(cap) {
            cap
        } else {
            inner
        }
    }

    fn probits(&self, x: &[f64]) -> Option<Vec<f64>> {
        match self.mode {
            NoiseMode::TopKOnly { .. } => None,
            NoiseMode::ProbitPerturbation { scale, seed } => {
                let clean = self.clean_probits(x)?;
                let mut rng = seed::rng(seed::hash_point(seed, x));
                let mut noisy: Vec<f64> = clean
                    .iter()
                    .map(|p| (p + rng.random_range(-1.0..=1.0) * scale).max(0.0))
                    .collect();
                let total: f64 = noisy.iter().sum();
                if total > 0.0 {
                    noisy.iter_mut().for_each(|p| *p /= total);
                    Some(noisy)
                } else {
                    Some(clean)
                }
            }
        }
    }

    fn label(&self, x: &[f64]) -> usize {
        match self.mode {
            NoiseMode::TopKOnly { .. } => self.inner.label(x),
            NoiseMode::ProbitPerturbation { .. } => match self.probits(x) {
                Some(p) => argmax(&p),
                None => self.inner.label(x),
            },
        }
    }

    fn top_k(&self, x: &[f64], k: usize) -> Vec<usize> {
        match self.mode {
            NoiseMode::TopKOnly { k: cap } => self.inner.inner().top_k(x, k.min(cap)),
            NoiseMode::ProbitPerturbation { .. } => match self.probits(x) {
                Some(p) => crate::model::ranked_labels(&p).into_iter().take(k).collect(),
                None => vec![self.label(x)],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tinylearn::{Activation, Mlp, MlpSpec};

    fn model() -> ClassifierHandle {
        ClassifierHandle::new("m", Mlp::init(&MlpSpec::new(2, &[6], 4, Activation::Tanh, 8)).unwrap())
    }

    fn grid() -> Vec<Vec<f64>> {
        (0..100).map(|i| vec![(i % 10) as f64 - 4.5, (i / 10) as f64 - 4.5]).collect()
    }

    #[test]
    fn top_k_wrapper_keeps_the_label() {
        let h = model();
        let w = OutputNoise::wrap(&h, NoiseMode::TopKOnly { k: 2 });
        assert_eq!(w.access(), AccessLevel::TopK { k: 2 });
        assert!(w.probits(&[0.0, 0.0]).is_err());
        for x in grid() {
            assert_eq!(w.label(&x), h.label(&x));
            assert_eq!(w.top_k(&x, 2).unwrap()[0], h.label(&x));
        }
    }

    #[test]
    fn perturbation_is_deterministic_and_normalised() {
        let h = model();
        let w = OutputNoise::wrap(&h, NoiseMode::ProbitPerturbation { scale: 0.05, seed: 3 });
        for x in grid() {
            let p = w.probits(&x).unwrap();
            assert_eq!(p, w.probits(&x).unwrap());
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(p.iter().all(|v| *v >= 0.0));
        }
    }
}
