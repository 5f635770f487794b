//! ROC curves with per-victim averaged rates.
//!
//! Scores are oriented so that larger means more suspicious; a pair is
//! flagged at threshold `t` when `score >= t`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scores of one victim's positive (stolen) and negative (unrelated) pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VictimScores {
    pub victim: String,
    pub positives: Vec<f64>,
    pub negatives: Vec<f64>,
}

impl VictimScores {
    pub fn new(victim: impl Into<String>, positives: Vec<f64>, negatives: Vec<f64>) -> Self {
        Self {
            victim: victim.into(),
            positives,
            negatives,
        }
    }
}

fn flagged_fraction(scores: &[f64], threshold: f64) -> f64 {
    scores.iter().filter(|&&s| s >= threshold).count() as f64 / scores.len() as f64
}

fn check(scores: &[VictimScores]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyPairSet("no victims".into()));
    }
    if let Some(v) = scores.iter().find(|v| v.positives.is_empty() || v.negatives.is_empty()) {
        return Err(Error::EmptyPairSet(format!(
            "victim {} has {} positive and {} negative pairs",
            v.victim,
            v.positives.len(),
            v.negatives.len()
        )));
    }
    Ok(())
}

/// `(TPR, FPR)` at `threshold`: flag rates are computed per victim and then
/// averaged over victims, so each victim weighs the same.
pub fn tpr_fpr_at_threshold(scores: &[VictimScores], threshold: f64) -> Result<(f64, f64)> {
    check(scores)?;
    let n = scores.len() as f64;
    let tpr = scores.iter().map(|v| flagged_fraction(&v.positives, threshold)).sum::<f64>() / n;
    let fpr = scores.iter().map(|v| flagged_fraction(&v.negatives, threshold)).sum::<f64>() / n;
    Ok((tpr, fpr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// From the strictest threshold (`+∞`, flags nothing) down to the
    /// smallest observed score (flags everything).
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps every distinct observed score as a threshold.
pub fn roc_curve(scores: &[VictimScores]) -> Result<RocCurve> {
    check(scores)?;
    let mut thresholds: Vec<f64> = scores
        .iter()
        .flat_map(|v| v.positives.iter().chain(&v.negatives).copied())
        .collect();
    if thresholds.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidConfig("NaN score".into()));
    }
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    for t in thresholds {
        let (tpr, fpr) = tpr_fpr_at_threshold(scores, t)?;
        points.push(RocPoint { threshold: t, fpr, tpr });
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}

/// Slack for rates that are sums of fractions.
const FPR_EPS: f64 = 1e-12;

/// Largest TPR among curve points whose FPR is at most `fpr_cap`; 0 if none.
pub fn tpr_at_fpr(curve: &RocCurve, fpr_cap: f64) -> f64 {
    curve
        .points
        .iter()
        .filter(|p| p.fpr <= fpr_cap + FPR_EPS)
        .map(|p| p.tpr)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_victim_average_differs_from_pooling() {
        let scores = vec![
            VictimScores::new("a", vec![1.0, 1.0, 1.0, 1.0], vec![0.0]),
            VictimScores::new("b", vec![0.0], vec![0.0]),
        ];
        let (tpr, fpr) = tpr_fpr_at_threshold(&scores, 0.5).unwrap();
        assert_eq!(tpr, 0.5);
        assert_eq!(fpr, 0.0);
        let pooled = 4.0 / 5.0;
        assert_ne!(tpr, pooled);
    }

    #[test]
    fn extreme_thresholds() {
        let scores = vec![VictimScores::new("a", vec![0.2, 0.9], vec![0.1, 0.5])];
        assert_eq!(tpr_fpr_at_threshold(&scores, f64::NEG_INFINITY).unwrap(), (1.0, 1.0));
        assert_eq!(tpr_fpr_at_threshold(&scores, f64::INFINITY).unwrap(), (0.0, 0.0));
        assert!(matches!(
            tpr_fpr_at_threshold(&[VictimScores::new("x", vec![], vec![1.0])], 0.0),
            Err(Error::EmptyPairSet(_))
        ));
    }

    #[test]
    fn perfect_and_chance_curves() {
        let perfect = vec![VictimScores::new("a", vec![0.0; 5], vec![-1.0; 20])];
        let c = roc_curve(&perfect).unwrap();
        assert_eq!(tpr_at_fpr(&c, 0.05), 1.0);
        assert_eq!(c.auc, 1.0);
        let last = c.points.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        // Identical score sets give the diagonal.
        let same: Vec<f64> = (0..100).map(f64::from).collect();
        let diag = roc_curve(&[VictimScores::new("a", same.clone(), same)]).unwrap();
        assert_eq!(tpr_at_fpr(&diag, 0.05), 0.05);
        assert!((diag.auc - 0.5).abs() < 1e-12);
    }
}
