//! Empirical agreement statistics between two classifiers over a finite
//! evaluation set. All quantities are frequencies over the supplied points.

use serde::{Deserialize, Serialize};

use super::{ClassifierHandle, LabeledDataset};
use crate::error::{Error, Result};

/// Accuracies of a pair `(h, g)`, their relative Hamming distance and the
/// Hamming distance conditioned on `h` being wrong.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairStats {
    pub alpha: f64,
    pub alpha_prime: f64,
    pub delta: f64,
    /// `None` when `h` makes no error on the evaluation set.
    pub delta_c: Option<f64>,
    pub n_eval: usize,
}

impl PairStats {
    /// Computes all four statistics from per-point labels.
    pub fn from_labels(truth: &[usize], h: &[usize], g: &[usize]) -> Result<Self> {
        let n = truth.len();
        if n == 0 {
            return Err(Error::EmptyEvaluationSet);
        }
        assert_eq!(h.len(), n);
        assert_eq!(g.len(), n);
        let mut h_right = 0usize;
        let mut g_right = 0usize;
        let mut disagree = 0usize;
        let mut h_wrong = 0usize;
        let mut disagree_on_h_wrong = 0usize;
        for i in 0..n {
            let differ = h[i] != g[i];
            if h[i] == truth[i] {
                h_right += 1;
            } else {
                h_wrong += 1;
                if differ {
                    disagree_on_h_wrong += 1;
                }
            }
            if g[i] == truth[i] {
                g_right += 1;
            }
            if differ {
                disagree += 1;
            }
        }
        let nf = n as f64;
        Ok(Self {
            alpha: h_right as f64 / nf,
            alpha_prime: g_right as f64 / nf,
            delta: disagree as f64 / nf,
            delta_c: (h_wrong > 0).then(|| disagree_on_h_wrong as f64 / h_wrong as f64),
            n_eval: n,
        })
    }

    /// Lower bound on `delta_c` implied by the other three statistics,
    /// `(δ − (1 − α′)) / (1 − α)`; `None` when `α = 1`.
    pub fn conditioned_lower_bound(&self) -> Option<f64> {
        (self.alpha < 1.0).then(|| (self.delta - (1.0 - self.alpha_prime)) / (1.0 - self.alpha))
    }
}

fn check(data: &LabeledDataset) -> Result<()> {
    if data.is_empty() {
        Err(Error::EmptyEvaluationSet)
    } else {
        Ok(())
    }
}

fn check_dim(h: &ClassifierHandle, data: &LabeledDataset) -> Result<()> {
    if h.input_dim() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.input_dim(),
            actual: data.dim(),
        });
    }
    Ok(())
}

pub fn accuracy(h: &ClassifierHandle, data: &LabeledDataset) -> Result<f64> {
    check(data)?;
    check_dim(h, data)?;
    let right = data.iter().filter(|(x, y)| h.label(x) == *y).count();
    Ok(right as f64 / data.len() as f64)
}

pub fn hamming_distance(h: &ClassifierHandle, g: &ClassifierHandle, data: &LabeledDataset) -> Result<f64> {
    check(data)?;
    check_dim(h, data)?;
    check_dim(g, data)?;
    let differ = data
        .points()
        .iter()
        .filter(|x| h.label(x) != g.label(x))
        .count();
    Ok(differ as f64 / data.len() as f64)
}

/// Disagreement rate restricted to the points `h` misclassifies.
///
/// Returns `Ok(None)` when `h` makes no mistake on `data`.
pub fn conditioned_hamming(
    h: &ClassifierHandle,
    g: &ClassifierHandle,
    data: &LabeledDataset,
) -> Result<Option<f64>> {
    check(data)?;
    check_dim(h, data)?;
    check_dim(g, data)?;
    let mut wrong = 0usize;
    let mut differ = 0usize;
    for (x, y) in data.iter() {
        let hx = h.label(x);
        if hx != y {
            wrong += 1;
            if g.label(x) != hx {
                differ += 1;
            }
        }
    }
    Ok((wrong > 0).then(|| differ as f64 / wrong as f64))
}

pub fn pair_stats(h: &ClassifierHandle, g: &ClassifierHandle, data: &LabeledDataset) -> Result<PairStats> {
    check(data)?;
    check_dim(h, data)?;
    check_dim(g, data)?;
    let hl = h.labels(data.points());
    let gl = g.labels(data.points());
    PairStats::from_labels(data.labels(), &hl, &gl)
}
