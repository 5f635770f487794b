//! Classifier abstraction, access levels and the agreement statistics used
//! to compare two classifiers.
//!
//! Labels are 0-based class indices in `0..num_classes` throughout.

mod dataset;
mod metrics;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tinylearn::Mlp;

pub use dataset::{LabeledDataset, Split};
pub use metrics::{accuracy, conditioned_hamming, hamming_distance, pair_stats, PairStats};

/// What a querier is allowed to observe of a model.
///
/// Each level includes every weaker one:
/// `Gradients ⊃ Probits ⊃ TopK ⊃ LabelOnly`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "level", rename_all = "snake_case")]
pub enum AccessLevel {
    LabelOnly,
    TopK { k: usize },
    Probits,
    Gradients,
}

impl AccessLevel {
    fn rank(self) -> u8 {
        match self {
            AccessLevel::LabelOnly => 0,
            AccessLevel::TopK { .. } => 1,
            AccessLevel::Probits => 2,
            AccessLevel::Gradients => 3,
        }
    }

    /// Whether a model exposed at `self` can serve a query requiring `required`.
    pub fn permits(self, required: AccessLevel) -> bool {
        match (self, required) {
            (_, AccessLevel::LabelOnly) => true,
            (AccessLevel::TopK { k: have }, AccessLevel::TopK { k: want }) => want <= have,
            (AccessLevel::LabelOnly, _) => false,
            (have, want) => have.rank() >= want.rank(),
        }
    }
}

impl fmt::Display for AccessLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccessLevel::LabelOnly => write!(f, "label-only"),
            AccessLevel::TopK { k } => write!(f, "top-{k}"),
            AccessLevel::Probits => write!(f, "probits"),
            AccessLevel::Gradients => write!(f, "gradients"),
        }
    }
}

/// A deterministic classifier over real vectors.
///
/// Implementations answer at their richest level; [`ClassifierHandle`]
/// enforces the declared [`AccessLevel`] before forwarding a query.
/// Passing an input of the wrong dimension is a programming error and may panic.
pub trait Classifier: Send + Sync + fmt::Debug {
    fn num_classes(&self) -> usize;

    fn input_dim(&self) -> usize;

    fn access(&self) -> AccessLevel;

    /// Probability vector over classes, or `None` for label-only models.
    fn probits(&self, x: &[f64]) -> Option<Vec<f64>>;

    fn label(&self, x: &[f64]) -> usize {
        let p = self
            .probits(x)
            .expect("label-only classifiers must override `label`");
        argmax(&p)
    }

    /// The `k` most likely labels, most likely first.
    fn top_k(&self, x: &[f64], k: usize) -> Vec<usize> {
        match self.probits(x) {
            Some(p) => ranked_labels(&p).into_iter().take(k).collect(),
            None => vec![self.label(x)],
        }
    }

    /// Vector-Jacobian product of the logits: `Σ_c upstream[c] · ∂logit_c/∂x`.
    fn logit_vjp(&self, _x: &[f64], _upstream: &[f64]) -> Option<Vec<f64>> {
        None
    }

    /// Raw logits when the model has them (used by gradient-based search).
    fn logits(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn as_mlp(&self) -> Option<&Mlp> {
        None
    }
}

/// Index of the largest entry; ties go to the smallest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// All labels ordered by decreasing probit, ties by ascending label index.
pub fn ranked_labels(probits: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..probits.len()).collect();
    order.sort_by(|&a, &b| probits[b].total_cmp(&probits[a]).then(a.cmp(&b)));
    order
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// A shareable, access-checked reference to a classifier.
#[derive(Clone)]
pub struct ClassifierHandle {
    id: Arc<str>,
    inner: Arc<dyn Classifier>,
}

impl fmt::Debug for ClassifierHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClassifierHandle")
            .field("id", &self.id)
            .field("access", &self.access())
            .field("num_classes", &self.num_classes())
            .field("input_dim", &self.input_dim())
            .finish()
    }
}

impl ClassifierHandle {
    pub fn new(id: impl Into<String>, model: impl Classifier + 'static) -> Self {
        Self::from_arc(id, Arc::new(model))
    }

    pub fn from_arc(id: impl Into<String>, inner: Arc<dyn Classifier>) -> Self {
        let id: String = id.into();
        Self { id: id.into(), inner }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn access(&self) -> AccessLevel {
        self.inner.access()
    }

    pub fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    pub fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    pub fn inner(&self) -> &Arc<dyn Classifier> {
        &self.inner
    }

    pub fn as_mlp(&self) -> Option<&Mlp> {
        self.inner.as_mlp()
    }

    fn require(&self, level: AccessLevel) -> Result<()> {
        if self.access().permits(level) {
            Ok(())
        } else {
            Err(Error::AccessInsufficient(format!(
                "model {} exposes {}, query needs {}",
                self.id,
                self.access(),
                level
            )))
        }
    }

    pub fn label(&self, x: &[f64]) -> usize {
        self.inner.label(x)
    }

    pub fn labels(&self, points: &[Vec<f64>]) -> Vec<usize> {
        points.iter().map(|x| self.inner.label(x)).collect()
    }

    pub fn top_k(&self, x: &[f64], k: usize) -> Result<Vec<usize>> {
        self.require(AccessLevel::TopK { k })?;
        Ok(self.inner.top_k(x, k))
    }

    pub fn probits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require(AccessLevel::Probits)?;
        self.inner
            .probits(x)
            .ok_or_else(|| Error::AccessInsufficient(format!("model {} has no probits", self.id)))
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.require(AccessLevel::Gradients)
            .map_err(|_| Error::GradientRequired)?;
        self.inner.logits(x).ok_or(Error::GradientRequired)
    }

    /// Gradient of logit `class` with respect to the input.
    pub fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        let c = self.num_classes();
        if class >= c {
            return Err(Error::BadClass {
                class,
                num_classes: c,
            });
        }
        let mut upstream = vec![0.0; c];
        upstream[class] = 1.0;
        self.logit_vjp(x, &upstream)
    }

    pub fn logit_vjp(&self, x: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        self.require(AccessLevel::Gradients)
            .map_err(|_| Error::GradientRequired)?;
        self.inner
            .logit_vjp(x, upstream)
            .ok_or(Error::GradientRequired)
    }
}

/// Label-only classifier backed by a closure. Handy for hand-built models.
pub struct FnClassifier<F> {
    num_classes: usize,
    input_dim: usize,
    f: F,
}

impl<F> FnClassifier<F>
where
    F: Fn(&[f64]) -> usize + Send + Sync,
{
    pub fn new(num_classes: usize, input_dim: usize, f: F) -> Self {
        Self {
            num_classes,
            input_dim,
            f,
        }
    }
}

impl<F> fmt::Debug for FnClassifier<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnClassifier")
            .field("num_classes", &self.num_classes)
            .field("input_dim", &self.input_dim)
            .finish()
    }
}

impl<F> Classifier for FnClassifier<F>
where
    F: Fn(&[f64]) -> usize + Send + Sync,
{
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn access(&self) -> AccessLevel {
        AccessLevel::LabelOnly
    }

    fn probits(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn label(&self, x: &[f64]) -> usize {
        (self.f)(x)
    }
}

fn point_key(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

/// Label-only classifier defined by an exact lookup table over points.
///
/// Points outside the table get `fallback`. Built from a dataset's labels it
/// realises the ground-truth concept `c` as a model.
#[derive(Debug, Clone)]
pub struct LookupClassifier {
    num_classes: usize,
    input_dim: usize,
    table: HashMap<Vec<u64>, usize>,
    fallback: usize,
}

impl LookupClassifier {
    pub fn new(
        num_classes: usize,
        input_dim: usize,
        entries: impl IntoIterator<Item = (Vec<f64>, usize)>,
        fallback: usize,
    ) -> Self {
        let table = entries
            .into_iter()
            .map(|(x, y)| (point_key(&x), y))
            .collect();
        Self {
            num_classes,
            input_dim,
            table,
            fallback,
        }
    }

    pub fn ground_truth(data: &LabeledDataset) -> Self {
        Self::new(
            data.num_classes(),
            data.dim(),
            data.points()
                .iter()
                .cloned()
                .zip(data.labels().iter().copied()),
            0,
        )
    }
}

impl Classifier for LookupClassifier {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn access(&self) -> AccessLevel {
        AccessLevel::LabelOnly
    }

    fn probits(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn label(&self, x: &[f64]) -> usize {
        self.table.get(&point_key(x)).copied().unwrap_or(self.fallback)
    }
}
