//! Scoring every pair of a benchmark and summarising over runs.

use std::collections::BTreeMap;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::benchmark::{Benchmark, ModelScale, VictimEntry};
use super::roc::{roc_curve, tpr_at_fpr, tpr_fpr_at_threshold, VictimScores};
use crate::error::{Error, Result};
use crate::model::{PairStats, Split};
use crate::qurd::{akh_test, CalibrationPool, Decision, FingerprintingScheme, SchemeSpec};
use crate::seed;

/// The FPR cap of the headline metric.
pub const FPR_CAP: f64 = 0.05;

/// What is being evaluated: the AKH baseline or an assembled scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Akh { budget: usize },
    Scheme(FingerprintingScheme),
}

impl Method {
    pub fn name(&self) -> String {
        match self {
            Method::Akh { .. } => "akh".into(),
            Method::Scheme(s) => s.name(),
        }
    }

    pub fn budget(&self) -> usize {
        match self {
            Method::Akh { budget } => *budget,
            Method::Scheme(s) => s.budget(),
        }
    }

    pub fn with_budget(&self, budget: usize) -> Result<Self> {
        match self {
            Method::Akh { .. } => {
                if budget == 0 {
                    return Err(Error::IncompatibleScheme("budget must be positive".into()));
                }
                Ok(Method::Akh { budget })
            }
            Method::Scheme(s) => Ok(Method::Scheme(s.with_budget(budget)?)),
        }
    }

    pub fn spec(&self) -> Option<&SchemeSpec> {
        match self {
            Method::Akh { .. } => None,
            Method::Scheme(s) => Some(s.spec()),
        }
    }
}

/// One scored (victim, suspect) pair in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub run: usize,
    pub victim: String,
    pub suspect: String,
    pub task: String,
    pub positive: bool,
    /// Fingerprint distance; lower is more alike.
    pub distance: f64,
    /// `−distance`, so that larger is more suspicious.
    pub score: f64,
    /// Verdict of the method's own decision rule, when it has one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flagged: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub run: usize,
    pub victim: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suspect: Option<String>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairStatsRecord {
    pub victim: String,
    pub suspect: String,
    pub task: String,
    pub stats: PairStats,
}

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub per_run: Vec<f64>,
}

impl Summary {
    pub fn of(values: Vec<f64>) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                per_run: values,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
            per_run: values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task: String,
    pub tpr_at_5: Summary,
}

/// Rates of the method's own decision rule, averaged per victim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRates {
    pub tpr: f64,
    pub fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run: usize,
    pub seed: u64,
    /// TPR@5% per positive task, using all negative pairs.
    pub tasks: BTreeMap<String, f64>,
    /// TPR@5% with every positive pair in one ROC.
    pub pooled: f64,
    /// Mean of the per-task values.
    pub task_mean: f64,
    pub auc: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<DecisionRates>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: String,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeSpec>,
    pub budget: usize,
    pub n_runs: usize,
    pub run_seeds: Vec<u64>,
    pub model_scale: ModelScale,
    pub tasks: Vec<TaskResult>,
    /// Aggregate over all positive pairs pooled into one ROC per run.
    pub aggregate_pooled: Summary,
    /// Aggregate as the simple mean over tasks per run.
    pub aggregate_task_mean: Summary,
    pub auc: Summary,
    pub runs: Vec<RunResult>,
    pub pairs: Vec<PairRecord>,
    pub pair_stats: Vec<PairStatsRecord>,
    pub skipped: Vec<SkipRecord>,
}

impl EvalReport {
    pub fn task(&self, name: &str) -> Option<&TaskResult> {
        self.tasks.iter().find(|t| t.task == name)
    }
}

struct VictimRun {
    pairs: Vec<PairRecord>,
    skipped: Vec<SkipRecord>,
}

fn skip(run: usize, victim: &VictimEntry, suspect: Option<&str>, e: &Error) -> SkipRecord {
    warn!("run {run}: skipping {}{}: {e}", victim.handle.id(), suspect.map(|s| format!(" vs {s}")).unwrap_or_default());
    SkipRecord {
        run,
        victim: victim.handle.id().into(),
        suspect: suspect.map(Into::into),
        reason: e.to_string(),
    }
}

fn record(run: usize, victim: &VictimEntry, s: &super::benchmark::Suspect, distance: f64, flagged: Option<bool>) -> PairRecord {
    PairRecord {
        run,
        victim: victim.handle.id().into(),
        suspect: s.handle.id().into(),
        task: s.tag.name().into(),
        positive: s.tag.is_positive(),
        distance,
        score: -distance,
        flagged,
    }
}

fn score_akh(budget: usize, run: usize, victim: &VictimEntry, seed: u64) -> VictimRun {
    let data = victim.data(Split::Test);
    let mut out = VictimRun {
        pairs: Vec::new(),
        skipped: Vec::new(),
    };
    for s in victim.suspects() {
        match akh_test(&victim.handle, &s.handle, data, budget, seed) {
            Ok(o) => out.pairs.push(record(run, victim, s, o.distance(), Some(o.flag))),
            Err(e @ Error::InsufficientNegatives { .. }) => {
                // Depends on the victim alone, so every pair would fail.
                out.pairs.clear();
                out.skipped.push(skip(run, victim, None, &e));
                break;
            }
            Err(e) => out.skipped.push(skip(run, victim, Some(s.handle.id()), &e)),
        }
    }
    out
}

fn score_scheme(scheme: &FingerprintingScheme, run: usize, victim: &VictimEntry, seed: u64) -> VictimRun {
    let mut out = VictimRun {
        pairs: Vec::new(),
        skipped: Vec::new(),
    };
    let data = victim.data(scheme.spec().seed_split);
    let prepared = scheme
        .query_set(&victim.handle, data, seed)
        .and_then(|q| scheme.fingerprint(&victim.handle, &q).map(|fp| (q, fp)));
    let (queries, victim_fp) = match prepared {
        Ok(p) => p,
        Err(e) => {
            out.skipped.push(skip(run, victim, None, &e));
            return out;
        }
    };
    let threshold = match scheme.spec().detector.decision {
        Decision::Majority => scheme.threshold(&victim_fp, None).ok(),
        Decision::Calibrated { .. } if !victim.calibration.is_empty() => victim
            .calibration
            .iter()
            .map(|h| scheme.fingerprint(h, &queries))
            .collect::<Result<Vec<_>>>()
            .and_then(CalibrationPool::new)
            .and_then(|pool| scheme.threshold(&victim_fp, Some(&pool)))
            .ok(),
        Decision::Calibrated { .. } => None,
    };
    for s in victim.suspects() {
        match scheme
            .fingerprint(&s.handle, &queries)
            .and_then(|fp| scheme.distance(&victim_fp, &fp))
        {
            Ok(d) => out
                .pairs
                .push(record(run, victim, s, d, threshold.map(|t| scheme.decide(d, t)))),
            Err(e) => out.skipped.push(skip(run, victim, Some(s.handle.id()), &e)),
        }
    }
    out
}

/// Query seed of `victim_index` in a run.
pub fn query_seed(run_seed: u64, victim_index: usize) -> u64 {
    seed::derive(run_seed, &[victim_index as u64])
}

fn victim_scores(pairs: &[PairRecord], keep: impl Fn(&PairRecord) -> bool, value: impl Fn(&PairRecord) -> f64) -> Vec<VictimScores> {
    let mut by_victim: BTreeMap<&str, VictimScores> = BTreeMap::new();
    let mut order = Vec::new();
    for p in pairs {
        let entry = by_victim.entry(&p.victim).or_insert_with(|| {
            order.push(p.victim.clone());
            VictimScores::new(p.victim.clone(), vec![], vec![])
        });
        if !p.positive {
            entry.negatives.push(value(p));
        } else if keep(p) {
            entry.positives.push(value(p));
        }
    }
    order
        .into_iter()
        .filter_map(|v| by_victim.remove(v.as_str()))
        .filter(|v| !v.positives.is_empty() && !v.negatives.is_empty())
        .collect()
}

fn tpr5(scores: &[VictimScores]) -> Option<(f64, f64)> {
    if scores.is_empty() {
        return None;
    }
    roc_curve(scores).ok().map(|c| (tpr_at_fpr(&c, FPR_CAP), c.auc))
}

fn summarise_run(run: usize, seed: u64, pairs: &[PairRecord], tasks: &[String]) -> Option<RunResult> {
    let (pooled, auc) = tpr5(&victim_scores(pairs, |_| true, |p| p.score))?;
    let per_task: BTreeMap<String, f64> = tasks
        .iter()
        .filter_map(|t| tpr5(&victim_scores(pairs, |p| &p.task == t, |p| p.score)).map(|(v, _)| (t.clone(), v)))
        .collect();
    let task_mean = per_task.values().sum::<f64>() / per_task.len() as f64;
    let decision = if pairs.iter().all(|p| p.flagged.is_some()) {
        let flags = victim_scores(pairs, |_| true, |p| f64::from(u8::from(p.flagged == Some(true))));
        tpr_fpr_at_threshold(&flags, 0.5).ok().map(|(tpr, fpr)| DecisionRates { tpr, fpr })
    } else {
        None
    };
    Some(RunResult {
        run,
        seed,
        tasks: per_task,
        pooled,
        task_mean,
        auc,
        decision,
    })
}

/// Agreement statistics of every pair on the victims' test splits.
pub fn benchmark_pair_stats(bench: &Benchmark) -> Result<Vec<PairStatsRecord>> {
    let per_victim = bench
        .victims
        .par_iter()
        .map(|v| {
            let truth = v.test.labels();
            let h = v.handle.labels(v.test.points());
            v.suspects()
                .map(|s| {
                    Ok(PairStatsRecord {
                        victim: v.handle.id().into(),
                        suspect: s.handle.id().into(),
                        task: s.tag.name().into(),
                        stats: PairStats::from_labels(truth, &h, &s.handle.labels(v.test.points()))?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_victim.into_iter().flatten().collect())
}

/// Positive task names in configuration order.
pub fn task_names(bench: &Benchmark) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for e in &bench.config.stolen {
        if !names.iter().any(|n| n == e.tag.name()) {
            names.push(e.tag.name().into());
        }
    }
    names
}

/// Runs seeds `seed, seed + 1, …` at `budget`.
pub fn evaluate(method: &Method, bench: &Benchmark, budget: usize, n_runs: usize, seed: u64) -> Result<EvalReport> {
    let seeds: Vec<u64> = (0..n_runs as u64).map(|r| seed.wrapping_add(r)).collect();
    evaluate_with_seeds(method, bench, budget, &seeds)
}

pub fn evaluate_with_seeds(method: &Method, bench: &Benchmark, budget: usize, run_seeds: &[u64]) -> Result<EvalReport> {
    if run_seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one run is required".into()));
    }
    let method = method.with_budget(budget)?;
    let jobs: Vec<(usize, usize)> = (0..run_seeds.len())
        .flat_map(|r| (0..bench.victims.len()).map(move |v| (r, v)))
        .collect();
    let results: Vec<VictimRun> = jobs
        .par_iter()
        .map(|&(r, v)| {
            let victim = &bench.victims[v];
            let qs = query_seed(run_seeds[r], v);
            match &method {
                Method::Akh { budget } => score_akh(*budget, r, victim, qs),
                Method::Scheme(s) => score_scheme(s, r, victim, qs),
            }
        })
        .collect();
    let mut pairs = Vec::new();
    let mut skipped = Vec::new();
    for vr in results {
        pairs.extend(vr.pairs);
        skipped.extend(vr.skipped);
    }
    let tasks = task_names(bench);
    let runs: Vec<RunResult> = run_seeds
        .iter()
        .enumerate()
        .filter_map(|(r, &s)| {
            let run_pairs: Vec<PairRecord> = pairs.iter().filter(|p| p.run == r).cloned().collect();
            summarise_run(r, s, &run_pairs, &tasks)
        })
        .collect();
    if runs.is_empty() {
        return Err(Error::EmptyPairSet(format!(
            "{} scored no usable pairs at budget {budget} ({} skips)",
            method.name(),
            skipped.len()
        )));
    }
    let task_results = tasks
        .iter()
        .map(|t| TaskResult {
            task: t.clone(),
            tpr_at_5: Summary::of(runs.iter().filter_map(|r| r.tasks.get(t).copied()).collect()),
        })
        .collect();
    info!("{} at budget {budget}: {} pairs scored, {} skipped", method.name(), pairs.len(), skipped.len());
    Ok(EvalReport {
        version: crate::VERSION.into(),
        method: method.name(),
        scheme: method.spec().cloned(),
        budget,
        n_runs: run_seeds.len(),
        run_seeds: run_seeds.to_vec(),
        model_scale: bench.model_scale(),
        tasks: task_results,
        aggregate_pooled: Summary::of(runs.iter().map(|r| r.pooled).collect()),
        aggregate_task_mean: Summary::of(runs.iter().map(|r| r.task_mean).collect()),
        auc: Summary::of(runs.iter().map(|r| r.auc).collect()),
        runs,
        pairs,
        pair_stats: benchmark_pair_stats(bench)?,
        skipped,
    })
}

/// One budget of a sweep: a report, or the reason the budget was skipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub budget: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<EvalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

/// Evaluates `method` at each budget, calling `on_cell` as each one completes.
pub fn budget_sweep(
    method: &Method,
    bench: &Benchmark,
    budgets: &[usize],
    n_runs: usize,
    seed: u64,
    mut on_cell: impl FnMut(&SweepCell) -> Result<()>,
) -> Result<Vec<SweepCell>> {
    if budgets.is_empty() {
        return Err(Error::InvalidConfig("no budgets given".into()));
    }
    if budgets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig(format!("budgets must be strictly ascending: {budgets:?}")));
    }
    let mut cells = Vec::with_capacity(budgets.len());
    for &budget in budgets {
        let cell = match evaluate(method, bench, budget, n_runs, seed) {
            Ok(report) => SweepCell {
                budget,
                report: Some(report),
                skipped: None,
            },
            Err(e) => {
                warn!("{} at budget {budget} skipped: {e}", method.name());
                SweepCell {
                    budget,
                    report: None,
                    skipped: Some(e.to_string()),
                }
            }
        };
        on_cell(&cell)?;
        cells.push(cell);
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_uses_population_std() {
        let s = Summary::of(vec![1.0, 0.0]);
        assert_eq!((s.mean, s.std), (0.5, 0.5));
        assert_eq!(Summary::of(vec![1.0; 5]).std, 0.0);
    }

    fn pair(victim: &str, task: &str, positive: bool, score: f64) -> PairRecord {
        PairRecord {
            run: 0,
            victim: victim.into(),
            suspect: format!("{victim}-{task}-{score}"),
            task: task.into(),
            positive,
            distance: -score,
            score,
            flagged: None,
        }
    }

    #[test]
    fn task_rates_use_all_negatives() {
        let mut pairs = vec![];
        for v in ["a", "b"] {
            pairs.push(pair(v, "same", true, 0.0));
            pairs.push(pair(v, "label_extraction", true, -0.6));
            for i in 0..10 {
                pairs.push(pair(v, "unrelated", false, -0.5 - i as f64 * 0.01));
            }
        }
        let tasks = vec!["same".to_string(), "label_extraction".to_string()];
        let r = summarise_run(0, 0, &pairs, &tasks).unwrap();
        assert_eq!(r.tasks["same"], 1.0);
        assert_eq!(r.tasks["label_extraction"], 0.0);
        assert_eq!(r.task_mean, 0.5);
        assert!(r.pooled >= 0.5 && r.pooled <= 1.0);
    }
}
