//! Distances between fingerprints and threshold calibration.

use serde::{Deserialize, Serialize};

use super::representation::{cosine_distance, Fingerprint, Payload};
use crate::error::{Error, Result};

/// How two fingerprints are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Normalised Hamming for labels, mean per-query cosine for probits,
    /// cosine of the flattened payload otherwise.
    Default,
    /// Root-mean-square elementwise difference (label mismatch counts as 1).
    Rms,
}

/// How a distance becomes a stolen / benign verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Decision {
    /// Flag when the distance is below 1/2 (majority of queries agree for label fingerprints).
    Majority,
    /// Flag below a threshold calibrated on unrelated models at `target_fpr`.
    Calibrated { target_fpr: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    #[serde(default = "default_metric")]
    pub metric: Metric,
    #[serde(default = "default_decision")]
    pub decision: Decision,
}

fn default_metric() -> Metric {
    Metric::Default
}

fn default_decision() -> Decision {
    Decision::Calibrated { target_fpr: 0.05 }
}

impl Default for DetectorSpec {
    fn default() -> Self {
        Self {
            metric: default_metric(),
            decision: default_decision(),
        }
    }
}

fn check_comparable(a: &Fingerprint, b: &Fingerprint) -> Result<()> {
    if a.kind != b.kind {
        return Err(Error::IncomparableFingerprints(format!("{:?} vs {:?}", a.kind, b.kind)));
    }
    if a.provenance != b.provenance {
        return Err(Error::IncomparableFingerprints(format!(
            "query sets differ: {:?} vs {:?}",
            a.provenance, b.provenance
        )));
    }
    Ok(())
}

fn shape_error() -> Error {
    Error::IncomparableFingerprints("payload shapes differ".into())
}

/// Distance under [`Metric::Default`]; lower means more alike.
pub fn fingerprint_distance(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    check_comparable(a, b)?;
    match (&a.payload, &b.payload) {
        (Payload::Labels { values: x }, Payload::Labels { values: y }) => {
            if x.len() != y.len() {
                return Err(shape_error());
            }
            if x.is_empty() {
                return Ok(0.0);
            }
            let differ = x.iter().zip(y).filter(|(p, q)| p != q).count();
            Ok(differ as f64 / x.len() as f64)
        }
        (
            Payload::Probits { rows: r1, cols: c1, values: x },
            Payload::Probits { rows: r2, cols: c2, values: y },
        ) => {
            if (r1, c1) != (r2, c2) {
                return Err(shape_error());
            }
            if *r1 == 0 || *c1 == 0 {
                return Ok(0.0);
            }
            let total: f64 = x
                .chunks_exact(*c1)
                .zip(y.chunks_exact(*c2))
                .map(|(p, q)| cosine_distance(p, q))
                .sum();
            Ok(total / *r1 as f64)
        }
        (Payload::Vector { values: x }, Payload::Vector { values: y })
        | (Payload::Matrix { values: x, .. }, Payload::Matrix { values: y, .. }) => {
            if x.len() != y.len() {
                return Err(shape_error());
            }
            Ok(cosine_distance(x, y))
        }
        _ => Err(shape_error()),
    }
}

/// Distance under [`Metric::Rms`].
pub fn rms_distance(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    check_comparable(a, b)?;
    let sq: Vec<f64> = match (&a.payload, &b.payload) {
        (Payload::Labels { values: x }, Payload::Labels { values: y }) if x.len() == y.len() => {
            x.iter().zip(y).map(|(p, q)| f64::from(u8::from(p != q))).collect()
        }
        (p, q) => match (p.reals(), q.reals()) {
            (Some(x), Some(y)) if x.len() == y.len() => x.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).collect(),
            _ => return Err(shape_error()),
        },
    };
    if sq.is_empty() {
        return Ok(0.0);
    }
    Ok((sq.iter().sum::<f64>() / sq.len() as f64).sqrt())
}

pub fn distance(metric: Metric, a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    match metric {
        Metric::Default => fingerprint_distance(a, b),
        Metric::Rms => rms_distance(a, b),
    }
}

/// Fingerprints of unrelated models on one shared query set.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPool {
    fingerprints: Vec<Fingerprint>,
}

impl CalibrationPool {
    pub fn new(fingerprints: Vec<Fingerprint>) -> Result<Self> {
        let first = fingerprints.first().ok_or(Error::EmptyCalibrationPool)?;
        if let Some(odd) = fingerprints
            .iter()
            .find(|f| f.kind != first.kind || f.provenance != first.provenance)
        {
            return Err(Error::IncomparableFingerprints(format!(
                "calibration pool mixes {:?} and {:?}",
                first.provenance, odd.provenance
            )));
        }
        Ok(Self { fingerprints })
    }

    pub fn fingerprints(&self) -> &[Fingerprint] {
        &self.fingerprints
    }

    pub fn len(&self) -> usize {
        self.fingerprints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fingerprints.is_empty()
    }
}

/// Threshold `t` for the rule "distance < t ⇒ stolen" such that at most a
/// `target_fpr` fraction of pool distances fall below `t`.
pub fn threshold_from_distances(distances: &[f64], target_fpr: f64) -> Result<f64> {
    if distances.is_empty() {
        return Err(Error::EmptyCalibrationPool);
    }
    if !(0.0..=1.0).contains(&target_fpr) {
        return Err(Error::InvalidConfig(format!("target_fpr {target_fpr} must lie in [0, 1]")));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Largest number of pool members we are allowed to flag.
    let allowed = ((target_fpr * n as f64) + 1e-9).floor() as usize;
    if allowed >= n {
        return Ok(sorted[n - 1] + 1.0);
    }
    Ok(sorted[allowed])
}

pub fn calibrate_threshold(victim_fp: &Fingerprint, pool: &CalibrationPool, target_fpr: f64, metric: Metric) -> Result<f64> {
    let distances = pool
        .fingerprints()
        .iter()
        .map(|f| distance(metric, victim_fp, f))
        .collect::<Result<Vec<_>>>()?;
    threshold_from_distances(&distances, target_fpr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qurd::query::Provenance;
    use crate::qurd::representation::RepresentationKind;

    fn labels(v: &[usize]) -> Fingerprint {
        Fingerprint {
            kind: RepresentationKind::RawLabels,
            payload: Payload::Labels { values: v.to_vec() },
            provenance: Provenance {
                sampler: "t".into(),
                seed: 0,
                size: v.len(),
            },
        }
    }

    #[test]
    fn label_distances() {
        let a = labels(&[1, 2, 3, 4]);
        assert_eq!(fingerprint_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(fingerprint_distance(&a, &labels(&[1, 2, 3, 1])).unwrap(), 0.25);
        assert_eq!(fingerprint_distance(&a, &labels(&[0, 0, 0, 0])).unwrap(), 1.0);
        assert_eq!(rms_distance(&a, &labels(&[1, 2, 3, 1])).unwrap(), 0.5);
    }

    #[test]
    fn provenance_mismatch_is_rejected() {
        let a = labels(&[1, 2]);
        let mut b = labels(&[1, 2]);
        b.provenance.seed = 1;
        assert!(matches!(fingerprint_distance(&a, &b), Err(Error::IncomparableFingerprints(_))));
        assert!(matches!(CalibrationPool::new(vec![a, b]), Err(Error::IncomparableFingerprints(_))));
        assert!(matches!(CalibrationPool::new(vec![]), Err(Error::EmptyCalibrationPool)));
    }

    #[test]
    fn threshold_examples() {
        let d: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let t = threshold_from_distances(&d, 0.05).unwrap();
        assert!(t <= 0.1);
        assert_eq!(d.iter().filter(|&&x| x < t).count(), 0);
        let all = threshold_from_distances(&d, 1.0).unwrap();
        assert!(all > 1.0);
        let none = threshold_from_distances(&d, 0.0).unwrap();
        assert!(none <= 0.1);
        let fifth = threshold_from_distances(&d, 0.25).unwrap();
        assert_eq!(d.iter().filter(|&&x| x < fifth).count(), 2);
        assert!(matches!(threshold_from_distances(&[], 0.1), Err(Error::EmptyCalibrationPool)));
    }
}
