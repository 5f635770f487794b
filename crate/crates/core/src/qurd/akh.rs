//! The misclassification-agreement baseline.

use log::warn;

use super::sampler::{misclassified, negative_sampler, uniform_sampler};
use crate::error::{Error, Result};
use crate::model::{ClassifierHandle, LabeledDataset};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AkhOutcome {
    /// Majority vote: more than half of the queries agree.
    pub flag: bool,
    /// Fraction of queries on which the two models agree.
    pub match_score: f64,
    /// The victim made no mistakes on `data`, so queries were drawn uniformly.
    pub fallback: bool,
    pub queries: usize,
}

impl AkhOutcome {
    /// `1 − match_score`, computed from counts so that it matches the
    /// normalised Hamming distance of a label fingerprint bit for bit.
    pub fn distance(&self) -> f64 {
        let matches = (self.match_score * self.queries as f64).round() as usize;
        (self.queries - matches) as f64 / self.queries as f64
    }
}

/// Queries `h_sus` on `k` points that `h` gets wrong and flags when most answers match `h`.
pub fn akh_test(h: &ClassifierHandle, h_sus: &ClassifierHandle, data: &LabeledDataset, k: usize, seed: u64) -> Result<AkhOutcome> {
    if k == 0 {
        return Err(Error::InvalidConfig("AKH needs at least one query".into()));
    }
    let available = misclassified(data, h).len();
    let (queries, fallback) = if available == 0 {
        if data.is_empty() {
            return Err(Error::InsufficientNegatives { needed: k, available: 0 });
        }
        warn!("{} makes no mistakes on the seed set; falling back to uniform queries", h.id());
        (uniform_sampler(data, k, seed)?, true)
    } else {
        (negative_sampler(data, h, k, seed)?, false)
    };
    let matches = queries
        .points()
        .iter()
        .filter(|x| h.label(x) == h_sus.label(x))
        .count();
    Ok(AkhOutcome {
        flag: 2 * matches > k,
        match_score: matches as f64 / k as f64,
        fallback,
        queries: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnClassifier, LookupClassifier, Split};

    fn line_data() -> LabeledDataset {
        let points: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64]).collect();
        let labels = (0..40).map(|i| usize::from(i >= 20)).collect();
        LabeledDataset::new(1, 2, points, labels, Split::Test).unwrap()
    }

    fn shifted(cut: f64) -> ClassifierHandle {
        ClassifierHandle::new(format!("cut{cut}"), FnClassifier::new(2, 1, move |x: &[f64]| usize::from(x[0] >= cut)))
    }

    #[test]
    fn copies_are_always_flagged() {
        let data = line_data();
        let h = shifted(25.0);
        for seed in 0..10 {
            for k in [1, 3, 5] {
                let out = akh_test(&h, &h.clone(), &data, k, seed).unwrap();
                assert!(out.flag);
                assert_eq!(out.match_score, 1.0);
                assert_eq!(out.distance(), 0.0);
            }
        }
    }

    #[test]
    fn perfect_suspect_is_never_flagged() {
        let data = line_data();
        let h = shifted(25.0);
        let truth = ClassifierHandle::new("c", LookupClassifier::ground_truth(&data));
        for seed in 0..10 {
            let out = akh_test(&h, &truth, &data, 5, seed).unwrap();
            assert!(!out.flag);
            assert_eq!(out.match_score, 0.0);
        }
    }

    #[test]
    fn perfect_victim_falls_back_and_short_pools_error() {
        let data = line_data();
        let perfect = shifted(20.0);
        let out = akh_test(&perfect, &perfect, &data, 10, 1).unwrap();
        assert!(out.fallback && out.flag);
        let h = shifted(25.0);
        assert!(matches!(
            akh_test(&h, &h, &data, 6, 1),
            Err(Error::InsufficientNegatives { needed: 6, available: 5 })
        ));
    }
}
