//! Conditioned Hamming distances of every benchmark pair.

use serde::{Deserialize, Serialize};

use super::benchmark::Benchmark;
use crate::error::Result;
use crate::model::{PairStats, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceRow {
    pub victim: String,
    pub suspect: String,
    pub task: String,
    pub positive: bool,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub delta: f64,
    /// Empty when the victim makes no mistakes on the split.
    pub delta_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDistribution {
    pub task: String,
    pub n: usize,
    pub undefined: usize,
    pub mean: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub split: Split,
    pub rows: Vec<DistanceRow>,
    pub by_task: Vec<TaskDistribution>,
    /// Fraction of positive-pair δ_C values above the 5th percentile of the
    /// negative-pair values. 0 means perfectly separated.
    pub overlap: Option<f64>,
}

/// Linearly interpolated percentile (`q` in `[0, 1]`) of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Fraction of `positives` strictly above the 5th percentile of `negatives`.
pub fn overlap_statistic(positives: &[f64], negatives: &[f64]) -> Option<f64> {
    let p5 = percentile(negatives, 0.05)?;
    if positives.is_empty() {
        return None;
    }
    Some(positives.iter().filter(|&&p| p > p5).count() as f64 / positives.len() as f64)
}

fn distribution(task: &str, rows: &[&DistanceRow]) -> TaskDistribution {
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.delta_c).collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    TaskDistribution {
        task: task.into(),
        n: rows.len(),
        undefined: rows.len() - defined.len(),
        mean,
        min: defined.iter().copied().reduce(f64::min),
        max: defined.iter().copied().reduce(f64::max),
    }
}

pub fn pair_distance_report(bench: &Benchmark, split: Split) -> Result<DistanceReport> {
    let mut rows = Vec::new();
    for v in &bench.victims {
        let data = v.data(split);
        let h = v.handle.labels(data.points());
        for s in v.suspects() {
            let st = PairStats::from_labels(data.labels(), &h, &s.handle.labels(data.points()))?;
            rows.push(DistanceRow {
                victim: v.handle.id().into(),
                suspect: s.handle.id().into(),
                task: s.tag.name().into(),
                positive: s.tag.is_positive(),
                alpha: st.alpha,
                alpha_prime: st.alpha_prime,
                delta: st.delta,
                delta_c: st.delta_c,
            });
        }
    }
    let mut tasks: Vec<String> = Vec::new();
    for r in &rows {
        if !tasks.contains(&r.task) {
            tasks.push(r.task.clone());
        }
    }
    let by_task = tasks
        .iter()
        .map(|t| distribution(t, &rows.iter().filter(|r| &r.task == t).collect::<Vec<_>>()))
        .collect();
    let pos: Vec<f64> = rows.iter().filter(|r| r.positive).filter_map(|r| r.delta_c).collect();
    let neg: Vec<f64> = rows.iter().filter(|r| !r.positive).filter_map(|r| r.delta_c).collect();
    Ok(DistanceReport {
        split,
        overlap: overlap_statistic(&pos, &neg),
        rows,
        by_task,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), Some(2.0));
        assert_eq!(percentile(&[0.0, 10.0], 0.05), Some(0.5));
        assert_eq!(percentile(&[], 0.5), None);
    }

    #[test]
    fn separated_sets_have_zero_overlap() {
        assert_eq!(overlap_statistic(&[0.0, 0.1, 0.2], &[0.5, 0.6, 0.9]), Some(0.0));
        assert_eq!(overlap_statistic(&[0.9, 0.95], &[0.5, 0.6, 0.9]), Some(1.0));
    }
}
