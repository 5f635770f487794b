//! `fingerprint`: generate benchmarks, evaluate schemes, sweep budgets.

mod run_config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fingerprint_core::harness::{
    budget_sweep, build_benchmark, evaluate, io, pair_distance_report, Benchmark, BenchmarkConfig, Method,
};
use fingerprint_core::model::Split;
use fingerprint_core::qurd::{assemble_scheme, SchemeSpec};
use fingerprint_core::Error as CoreError;
use log::info;
use serde::Serialize;

use run_config::{MethodConfig, Provenance, RunConfig};

#[derive(Parser)]
#[command(name = "fingerprint", version, about = "Model-stealing detection benchmarks")]
struct Cli {
    /// Worker threads; defaults to the number of available cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a benchmark from a JSON config and save it to a directory.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score one method on a saved benchmark.
    Evaluate {
        #[arg(long)]
        benchmark: PathBuf,
        /// `akh`, a scheme JSON file, or inline scheme JSON.
        #[arg(long)]
        scheme: String,
        /// Query budget; defaults to the scheme's own.
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score several methods over a grid of budgets.
    Sweep {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, required = true)]
        scheme: Vec<String>,
        /// Comma-separated, strictly ascending.
        #[arg(long, value_delimiter = ',', default_value = "10,25,50,100")]
        budgets: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conditioned Hamming distances of every benchmark pair.
    Distances {
        #[arg(long)]
        benchmark: PathBuf,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Test => Split::Test,
        }
    }
}

fn parse_method(arg: &str) -> Result<MethodConfig> {
    if arg.eq_ignore_ascii_case("akh") {
        return Ok(MethodConfig::Akh);
    }
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading scheme {arg}"))?
    };
    let spec = SchemeSpec::from_json(&text).with_context(|| format!("scheme {arg}"))?;
    Ok(MethodConfig::Scheme { spec })
}

fn build_method(m: &MethodConfig, budget: Option<usize>) -> Result<Method> {
    let method = match m {
        MethodConfig::Akh => Method::Akh {
            budget: budget.unwrap_or(fingerprint_core::qurd::DEFAULT_BUDGET),
        },
        MethodConfig::Scheme { spec } => Method::Scheme(assemble_scheme(spec.clone())?),
    };
    Ok(match budget {
        Some(b) => method.with_budget(b)?,
        None => method,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(f, value)?;
    Ok(())
}

fn create(path: PathBuf) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?))
}

fn load(dir: &Path) -> Result<Benchmark> {
    Benchmark::load(dir).with_context(|| format!("loading benchmark {}", dir.display()))
}

fn generate(config: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let cfg = BenchmarkConfig::from_json(&text).with_context(|| format!("{}", config.display()))?;
    let bench = build_benchmark(&cfg)?;
    bench.save(out)?;
    let rc = RunConfig::Generate {
        config: cfg,
        out: out.to_path_buf(),
    };
    info!("saved {} pairs to {}", bench.num_pairs(), out.display());
    write_json(&out.join("run_config.json"), &Provenance {
        version: fingerprint_core::VERSION,
        run_config: &rc,
        result: serde_json::json!({}),
    })
}

fn cmd_evaluate(benchmark: &Path, scheme: &str, budget: Option<usize>, runs: usize, seed: u64, out: &Path) -> Result<()> {
    let mc = parse_method(scheme)?;
    let method = build_method(&mc, budget)?;
    let bench = load(benchmark)?;
    let budget = method.budget();
    let report = evaluate(&method, &bench, budget, runs, seed)?;
    fs::create_dir_all(out)?;
    io::write_summary_csv(create(out.join("summary.csv"))?, &report)?;
    io::write_runs_csv(create(out.join("runs.csv"))?, &report)?;
    io::write_pairs_csv(create(out.join("pairs.csv"))?, &report)?;
    let rc = RunConfig::Evaluate {
        benchmark: benchmark.to_path_buf(),
        method: mc,
        budget,
        runs,
        seed,
        out: out.to_path_buf(),
    };
    write_json(&out.join("report.json"), &Provenance {
        version: fingerprint_core::VERSION,
        run_config: &rc,
        result: &report,
    })?;
    for t in &report.tasks {
        println!("{:<30} {:.3} ± {:.3}", t.task, t.tpr_at_5.mean, t.tpr_at_5.std);
    }
    println!("{:<30} {:.3} ± {:.3}", "aggregate_pooled", report.aggregate_pooled.mean, report.aggregate_pooled.std);
    Ok(())
}

fn cmd_sweep(benchmark: &Path, schemes: &[String], budgets: &[usize], runs: usize, seed: u64, out: &Path) -> Result<()> {
    if schemes.is_empty() {
        bail!(CoreError::InvalidConfig("no schemes given".into()));
    }
    let configs = schemes.iter().map(|s| parse_method(s)).collect::<Result<Vec<_>>>()?;
    let methods = configs.iter().map(|m| build_method(m, None)).collect::<Result<Vec<_>>>()?;
    let bench = load(benchmark)?;
    fs::create_dir_all(out)?;
    let mut grid = io::headed_writer(create(out.join("grid.csv"))?, &io::GRID_HEADER)?;
    let mut tasks = io::headed_writer(create(out.join("grid_tasks.csv"))?, &io::TASK_HEADER)?;
    let mut all = Vec::new();
    for method in &methods {
        let cells = budget_sweep(method, &bench, budgets, runs, seed, |cell| {
            if let Some(r) = &cell.report {
                io::append_rows(&mut grid, &io::grid_rows(r))?;
                io::append_rows(&mut tasks, &io::task_rows(r))?;
                info!("{} budget {} pooled {:.3}", r.method, r.budget, r.aggregate_pooled.mean);
            }
            Ok(())
        })?;
        all.extend(cells);
    }
    io::write_sweep_summary_csv(create(out.join("sweep_summary.csv"))?, &all)?;
    let rc = RunConfig::Sweep {
        benchmark: benchmark.to_path_buf(),
        methods: configs,
        budgets: budgets.to_vec(),
        runs,
        seed,
        out: out.to_path_buf(),
    };
    write_json(&out.join("sweep.json"), &Provenance {
        version: fingerprint_core::VERSION,
        run_config: &rc,
        result: serde_json::json!({ "cells": all }),
    })
}

fn cmd_distances(benchmark: &Path, split: Split, out: &Path) -> Result<()> {
    let bench = load(benchmark)?;
    let report = pair_distance_report(&bench, split)?;
    fs::create_dir_all(out)?;
    io::write_distance_csv(create(out.join("distances.csv"))?, &report)?;
    let rc = RunConfig::Distances {
        benchmark: benchmark.to_path_buf(),
        split,
        out: out.to_path_buf(),
    };
    write_json(&out.join("distances.json"), &Provenance {
        version: fingerprint_core::VERSION,
        run_config: &rc,
        result: serde_json::json!({ "by_task": report.by_task, "overlap": report.overlap }),
    })?;
    for d in &report.by_task {
        println!("{:<30} mean {:?} min {:?} max {:?}", d.task, d.mean, d.min, d.max);
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { config, out } => generate(&config, &out),
        Command::Evaluate {
            benchmark,
            scheme,
            budget,
            runs,
            seed,
            out,
        } => cmd_evaluate(&benchmark, &scheme, budget, runs, seed, &out),
        Command::Sweep {
            benchmark,
            scheme,
            budgets,
            runs,
            seed,
            out,
        } => cmd_sweep(&benchmark, &scheme, &budgets, runs, seed, &out),
        Command::Distances { benchmark, split, out } => cmd_distances(&benchmark, split.into(), &out),
    }
}

/// Incompatible inputs exit with 2, other failures with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    let incompatible = err.chain().filter_map(|e| e.downcast_ref::<CoreError>()).any(|e| {
        matches!(
            e,
            CoreError::InvalidManifest(_)
                | CoreError::InvalidModelFile(_)
                | CoreError::IncompatibleScheme(_)
                | CoreError::IncompatibleTask(_)
                | CoreError::AccessInsufficient(_)
                | CoreError::GradientRequired
                | CoreError::PairingRequired
                | CoreError::BudgetShapeMismatch(_)
                | CoreError::IncomparableFingerprints(_)
                | CoreError::InvalidConfig(_)
                | CoreError::Json(_)
        )
    });
    if incompatible {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
