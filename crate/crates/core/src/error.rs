use std::io;

use thiserror::Error;

/// Errors raised across the toolkit.
///
/// Variant names mirror the failure kinds callers are expected to match on,
/// e.g. [`Error::InsufficientNegatives`] carries the number of misclassified
/// points that were actually available so a caller can lower its budget.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty-evaluation-set")]
    EmptyEvaluationSet,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("infeasible-task: {0}")]
    InfeasibleTask(String),

    #[error("training-diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("bad-class: {class} not in 0..{num_classes}")]
    BadClass { class: usize, num_classes: usize },

    #[error("degenerate-prune: fraction {0} must lie in [0, 1)")]
    DegeneratePrune(f64),

    #[error("degenerate-quantization: {0} bits (need at least 2)")]
    DegenerateQuantization(u32),

    #[error("incompatible-task: {0}")]
    IncompatibleTask(String),

    #[error("not an in-process MLP: {0}")]
    NotAnMlp(String),

    #[error("empty-query-pool")]
    EmptyQueryPool,

    #[error("budget-exceeds-pool: budget {budget}, pool {pool}")]
    BudgetExceedsPool { budget: usize, pool: usize },

    #[error("insufficient-negatives: needed {needed}, available {available}")]
    InsufficientNegatives { needed: usize, available: usize },

    #[error("gradient-required")]
    GradientRequired,

    #[error("budget-shape-mismatch: {0}")]
    BudgetShapeMismatch(String),

    #[error("pairing-required")]
    PairingRequired,

    #[error("access-insufficient: {0}")]
    AccessInsufficient(String),

    #[error("incomparable-fingerprints: {0}")]
    IncomparableFingerprints(String),

    #[error("empty-calibration-pool")]
    EmptyCalibrationPool,

    #[error("incompatible-scheme: {0}")]
    IncompatibleScheme(String),

    #[error("empty-task-list")]
    EmptyTaskList,

    #[error("empty-pair-set: victim {0}")]
    EmptyPairSet(String),

    #[error("invalid model file: {0}")]
    InvalidModelFile(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
