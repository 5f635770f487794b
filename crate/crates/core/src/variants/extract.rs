//! Training substitutes from a victim's answers, and independent models.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClassifierHandle, LabeledDataset};
use crate::qurd::{mean_range, pgd_untargeted, sampler::DEFAULT_EPSILON_FRACTION, PgdConfig};
use crate::seed;
use crate::tinylearn::{fit, train, LossKind, Mlp, MlpSpec, TrainConfig, Targets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExtractionMode {
    /// Cross-entropy on the victim's labels.
    Labels,
    /// KL distillation on the victim's probits.
    Probits,
    /// Label extraction whose pool is augmented with adversarial points
    /// found against the extractor's own interim model.
    AdversarialLabels {
        warmup_epochs: usize,
        /// Defaults to 0.1 × the mean per-dimension range of the pool.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
    },
}

fn check_pool(victim: &ClassifierHandle, pool: &LabeledDataset, arch: &MlpSpec) -> Result<()> {
    if pool.is_empty() {
        return Err(Error::EmptyQueryPool);
    }
    if pool.dim() != victim.input_dim() || arch.input_dim() != victim.input_dim() {
        return Err(Error::IncompatibleTask(format!(
            "victim takes {} inputs, pool has {}, architecture {}",
            victim.input_dim(),
            pool.dim(),
            arch.input_dim()
        )));
    }
    if arch.num_classes() != victim.num_classes() {
        return Err(Error::IncompatibleTask(format!(
            "victim has {} classes, architecture {}",
            victim.num_classes(),
            arch.num_classes()
        )));
    }
    Ok(())
}

/// Trains a fresh `arch` network (initialised from `seed`) to imitate `victim` on `pool`.
pub fn extract(
    victim: &ClassifierHandle,
    pool: &LabeledDataset,
    arch: &MlpSpec,
    cfg: &TrainConfig,
    mode: ExtractionMode,
    seed: u64,
) -> Result<ClassifierHandle> {
    check_pool(victim, pool, arch)?;
    let arch = arch.with_seed(seed::derive(seed, &[seed::label("extract-init")]));
    let shuffle = seed::derive(seed, &[seed::label("extract-shuffle")]);
    let mut model = Mlp::init(&arch)?;
    let points = pool.points();
    let tag = match mode {
        ExtractionMode::Labels => {
            fit(&mut model, points, &Targets::Hard(victim.labels(points)), cfg, shuffle)?;
            "label-extract"
        }
        ExtractionMode::Probits => {
            let soft = points.iter().map(|x| victim.probits(x)).collect::<Result<Vec<_>>>()?;
            let cfg = TrainConfig {
                loss: LossKind::DistillationKl,
                ..cfg.clone()
            };
            fit(&mut model, points, &Targets::Soft(soft), &cfg, shuffle)?;
            "probit-extract"
        }
        ExtractionMode::AdversarialLabels { warmup_epochs, epsilon } => {
            let labels = victim.labels(points);
            if warmup_epochs > 0 {
                let warm = TrainConfig {
                    epochs: warmup_epochs,
                    ..cfg.clone()
                };
                fit(&mut model, points, &Targets::Hard(labels.clone()), &warm, seed::derive(shuffle, &[0]))?;
            }
            let eps = epsilon.unwrap_or(DEFAULT_EPSILON_FRACTION * mean_range(pool));
            let interim = ClassifierHandle::new("interim", model.clone());
            let pgd = PgdConfig::with_epsilon(eps);
            let mut augmented = points.to_vec();
            for x in points {
                augmented.push(pgd_untargeted(&interim, x, &pgd)?);
            }
            let mut all_labels = labels;
            all_labels.extend(victim.labels(&augmented[points.len()..]));
            fit(&mut model, &augmented, &Targets::Hard(all_labels), cfg, seed::derive(shuffle, &[1]))?;
            "adv-label-extract"
        }
    };
    Ok(ClassifierHandle::new(format!("{}+{tag}", victim.id()), model))
}

/// An independently initialised model trained on `task_data`.
pub fn unrelated(task_data: &LabeledDataset, arch: &MlpSpec, cfg: &TrainConfig, seed: u64) -> Result<ClassifierHandle> {
    let model = train(task_data, &arch.with_seed(seed), cfg)?;
    Ok(ClassifierHandle::new(format!("unrelated-{seed}"), model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::hamming_distance;
    use crate::tinylearn::{generate_task, Activation, SyntheticTaskSpec};

    fn setup() -> (ClassifierHandle, LabeledDataset, LabeledDataset, MlpSpec) {
        let spec = SyntheticTaskSpec::blobs(3, 4, 300, 200, 11);
        let (tr, te) = generate_task(&spec).unwrap();
        let arch = MlpSpec::new(4, &[16], 3, Activation::Relu, 5);
        let victim = ClassifierHandle::new("v", train(&tr, &arch, &TrainConfig::default()).unwrap());
        (victim, tr, te, arch)
    }

    #[test]
    fn extraction_modes_agree_with_the_victim() {
        let (victim, tr, te, arch) = setup();
        let cfg = TrainConfig::default();
        for mode in [
            ExtractionMode::Labels,
            ExtractionMode::Probits,
            ExtractionMode::AdversarialLabels {
                warmup_epochs: 5,
                epsilon: None,
            },
        ] {
            let stolen = extract(&victim, &tr, &arch, &cfg, mode, 9).unwrap();
            let d = hamming_distance(&victim, &stolen, &te).unwrap();
            assert!(d < 0.2, "{mode:?}: {d}");
        }
    }

    #[test]
    fn empty_pool_is_an_error() {
        let (victim, tr, _, arch) = setup();
        let empty = tr.subset(&[]);
        assert!(matches!(
            extract(&victim, &empty, &arch, &TrainConfig::default(), ExtractionMode::Labels, 0),
            Err(Error::EmptyQueryPool)
        ));
    }

    #[test]
    fn unrelated_models_differ() {
        let (_, tr, te, arch) = setup();
        let cfg = TrainConfig::default();
        let a = unrelated(&tr, &arch, &cfg, 100).unwrap();
        let b = unrelated(&tr, &arch, &cfg, 101).unwrap();
        assert!(hamming_distance(&a, &b, &te).unwrap() > 0.0);
    }
}
