//! Builds the desk benchmark and prints TPR@5% per task for a few schemes.
//!
//! `cargo run --release -p fingerprint-core --example desk`

use std::time::Instant;

use fingerprint_core::harness::{build_benchmark, evaluate, pair_distance_report, BenchmarkConfig, Method};
use fingerprint_core::model::{accuracy, Split};
use fingerprint_core::qurd::{assemble_scheme, DetectorSpec, RepresentationSpec, SamplerSpec, SchemeSpec};

fn main() -> fingerprint_core::Result<()> {
    env_logger::init();
    let t = Instant::now();
    let bench = build_benchmark(&BenchmarkConfig::desk())?;
    println!("built {} pairs in {:.1?}", bench.num_pairs(), t.elapsed());
    for v in &bench.victims {
        let acc = accuracy(&v.handle, &v.test)?;
        let wrong = (v.test.len() as f64 * (1.0 - acc)).round();
        println!("{}: test accuracy {acc:.3} ({wrong} mistakes)", v.handle.id());
    }
    let dist = pair_distance_report(&bench, Split::Test)?;
    for d in &dist.by_task {
        println!("δ_C {:<30} mean {:.3?} min {:.3?} max {:.3?}", d.task, d.mean, d.min, d.max);
    }
    println!("overlap {:?}", dist.overlap);
    let scheme = |s: SamplerSpec| {
        assemble_scheme(SchemeSpec::new(s, RepresentationSpec::raw_labels(), DetectorSpec::default())).map(Method::Scheme)
    };
    let methods = vec![
        Method::Akh { budget: 100 },
        scheme(SamplerSpec::Negative)?,
        scheme(SamplerSpec::Uniform)?,
        scheme(SamplerSpec::adversarial())?,
        scheme(SamplerSpec::chain(SamplerSpec::Negative, SamplerSpec::adversarial()))?,
    ];
    for m in methods {
        let t = Instant::now();
        let r = evaluate(&m, &bench, 100, 5, 0)?;
        println!("\n{} ({:.1?})", r.method, t.elapsed());
        for task in &r.tasks {
            println!("  {:<30} {:.3} ± {:.3}  {:?}", task.task, task.tpr_at_5.mean, task.tpr_at_5.std, task.tpr_at_5.per_run);
        }
        println!("  pooled {:.3}  task-mean {:.3}", r.aggregate_pooled.mean, r.aggregate_task_mean.mean);
    }
    println!("\nakh budget sweep");
    for budget in [10, 25, 50, 100] {
        let r = evaluate(&Method::Akh { budget }, &bench, budget, 5, 0)?;
        println!("  {budget:>4}  pooled {:.3} ± {:.3}", r.aggregate_pooled.mean, r.aggregate_pooled.std);
    }
    Ok(())
}
