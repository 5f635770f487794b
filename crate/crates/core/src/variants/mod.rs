//! Stolen and unrelated model factories.

mod extract;
mod noise;
mod transform;

pub use extract::{extract, unrelated, ExtractionMode};
pub use noise::{NoiseMode, OutputNoise};
pub use transform::{finetune, prune, quantize, transfer};

use serde::{Deserialize, Serialize};

/// How a suspect model was produced from (or independently of) its victim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskTag {
    Same,
    Quantize {
        bits: u32,
    },
    Finetune {
        #[serde(default = "default_finetune_epochs")]
        epochs: usize,
        #[serde(default = "default_finetune_lr")]
        learning_rate: f64,
    },
    /// Output layer reinitialised, then trained on a fresh task sample.
    Transfer {
        #[serde(default = "default_transfer_epochs")]
        epochs: usize,
        #[serde(default = "default_transfer_lr")]
        learning_rate: f64,
    },
    Prune {
        fraction: f64,
    },
    ProbitExtraction {
        #[serde(default = "default_extract_epochs")]
        epochs: usize,
        #[serde(default = "default_extract_lr")]
        learning_rate: f64,
    },
    LabelExtraction {
        #[serde(default = "default_extract_epochs")]
        epochs: usize,
        #[serde(default = "default_extract_lr")]
        learning_rate: f64,
    },
    AdversarialLabelExtraction {
        #[serde(default = "default_extract_epochs")]
        epochs: usize,
        #[serde(default = "default_extract_lr")]
        learning_rate: f64,
        #[serde(default = "default_warmup")]
        warmup_epochs: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
    Unrelated,
}

fn default_finetune_epochs() -> usize {
    5
}

fn default_transfer_epochs() -> usize {
    20
}

fn default_finetune_lr() -> f64 {
    0.005
}

fn default_transfer_lr() -> f64 {
    0.01
}

fn default_extract_epochs() -> usize {
    60
}

fn default_extract_lr() -> f64 {
    0.01
}

fn default_warmup() -> usize {
    20
}

impl TaskTag {
    pub fn finetune() -> Self {
        TaskTag::Finetune {
            epochs: default_finetune_epochs(),
            learning_rate: default_finetune_lr(),
        }
    }

    pub fn transfer() -> Self {
        TaskTag::Transfer {
            epochs: default_transfer_epochs(),
            learning_rate: default_transfer_lr(),
        }
    }

    pub fn probit_extraction() -> Self {
        TaskTag::ProbitExtraction {
            epochs: default_extract_epochs(),
            learning_rate: default_extract_lr(),
        }
    }

    pub fn label_extraction() -> Self {
        TaskTag::LabelExtraction {
            epochs: default_extract_epochs(),
            learning_rate: default_extract_lr(),
        }
    }

    pub fn adversarial_label_extraction() -> Self {
        TaskTag::AdversarialLabelExtraction {
            epochs: default_extract_epochs(),
            learning_rate: default_extract_lr(),
            warmup_epochs: default_warmup(),
            epsilon: None,
        }
    }

    /// Stable task name used to group report rows.
    pub fn name(&self) -> &'static str {
        match self {
            TaskTag::Same => "same",
            TaskTag::Quantize { .. } => "quantize",
            TaskTag::Finetune { .. } => "finetune",
            TaskTag::Transfer { .. } => "transfer",
            TaskTag::Prune { .. } => "prune",
            TaskTag::ProbitExtraction { .. } => "probit_extraction",
            TaskTag::LabelExtraction { .. } => "label_extraction",
            TaskTag::AdversarialLabelExtraction { .. } => "adversarial_label_extraction",
            TaskTag::Unrelated => "unrelated",
        }
    }

    /// Whether a suspect with this tag counts as stolen.
    pub fn is_positive(&self) -> bool {
        !matches!(self, TaskTag::Unrelated)
    }

    /// Copies of the victim's weights, possibly lightly modified. Transfer
    /// is excluded: its retrained head makes it a different classifier.
    pub fn is_model_leak(&self) -> bool {
        matches!(
            self,
            TaskTag::Same | TaskTag::Quantize { .. } | TaskTag::Finetune { .. } | TaskTag::Prune { .. }
        )
    }
}
