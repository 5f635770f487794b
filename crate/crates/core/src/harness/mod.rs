//! Benchmarks, scheme evaluation and reports.

mod benchmark;
mod distances;
mod eval;
pub mod io;
mod roc;

pub use benchmark::{
    build_benchmark, Benchmark, BenchmarkConfig, DataSource, Manifest, ModelRecord, ModelScale, StolenEntry, Suspect,
    TaskTemplate, VictimEntry, VictimRecord, MANIFEST_FILE,
};
pub use distances::{overlap_statistic, pair_distance_report, percentile, DistanceReport, DistanceRow, TaskDistribution};
pub use eval::{
    benchmark_pair_stats, budget_sweep, evaluate, evaluate_with_seeds, query_seed, task_names, DecisionRates, EvalReport,
    Method, PairRecord, PairStatsRecord, RunResult, SkipRecord, Summary, SweepCell, TaskResult, FPR_CAP,
};
pub use roc::{roc_curve, tpr_at_fpr, tpr_fpr_at_threshold, RocCurve, RocPoint, VictimScores};
