//! Serializable records of what each command was asked to do.

use std::path::PathBuf;

use fingerprint_core::harness::BenchmarkConfig;
use fingerprint_core::model::Split;
use fingerprint_core::qurd::SchemeSpec;
use serde::{Deserialize, Serialize};

/// A method as given on the command line: the AKH baseline or a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MethodConfig {
    Akh,
    Scheme { spec: SchemeSpec },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum RunConfig {
    Generate {
        config: BenchmarkConfig,
        out: PathBuf,
    },
    Evaluate {
        benchmark: PathBuf,
        method: MethodConfig,
        budget: usize,
        runs: usize,
        seed: u64,
        out: PathBuf,
    },
    Sweep {
        benchmark: PathBuf,
        methods: Vec<MethodConfig>,
        budgets: Vec<usize>,
        runs: usize,
        seed: u64,
        out: PathBuf,
    },
    Distances {
        benchmark: PathBuf,
        split: Split,
        out: PathBuf,
    },
}

/// Wrapper written next to every report.
#[derive(Debug, Serialize)]
pub struct Provenance<'a, T: Serialize> {
    pub version: &'a str,
    pub run_config: &'a RunConfig,
    #[serde(flatten)]
    pub result: T,
}
