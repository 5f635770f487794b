//! Query samplers: uniform, negative, adversarial, subsampling and chains.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pgd::{pgd_untargeted, PgdConfig};
use super::query::QuerySet;
use crate::error::{Error, Result};
use crate::model::{AccessLevel, ClassifierHandle, LabeledDataset};
use crate::seed;

/// Default adversarial radius as a fraction of the mean per-dimension range.
pub const DEFAULT_EPSILON_FRACTION: f64 = 0.1;

/// Serializable sampler description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SamplerSpec {
    Uniform,
    Negative,
    Adversarial {
        /// Radius of the ℓ∞ ball; defaults to 0.1 × the mean per-dimension
        /// range of the seed pool.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default = "default_steps")]
        steps: usize,
        /// Defaults to ε / 8.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step_size: Option<f64>,
    },
    Subsample {
        k_variants: usize,
        /// Probability that a coordinate is kept (not zeroed).
        vicinity: f64,
    },
    Chain {
        stages: Vec<SamplerSpec>,
    },
}

fn default_steps() -> usize {
    PgdConfig::DEFAULT_STEPS
}

impl SamplerSpec {
    pub fn adversarial() -> Self {
        SamplerSpec::Adversarial {
            epsilon: None,
            steps: default_steps(),
            step_size: None,
        }
    }

    pub fn chain(first: SamplerSpec, second: SamplerSpec) -> Self {
        SamplerSpec::Chain {
            stages: vec![first, second],
        }
    }

    /// Short name used in reports, e.g. `chain(negative>adversarial)`.
    pub fn name(&self) -> String {
        match self {
            SamplerSpec::Uniform => "uniform".into(),
            SamplerSpec::Negative => "negative".into(),
            SamplerSpec::Adversarial { .. } => "adversarial".into(),
            SamplerSpec::Subsample { .. } => "subsample".into(),
            SamplerSpec::Chain { stages } => format!(
                "chain({})",
                stages.iter().map(SamplerSpec::name).collect::<Vec<_>>().join(">")
            ),
        }
    }

    /// Full description including parameters; part of query provenance.
    pub fn describe(&self) -> String {
        match self {
            SamplerSpec::Adversarial {
                epsilon,
                steps,
                step_size,
            } => format!(
                "adversarial(eps={},steps={steps},step={})",
                epsilon.map_or("auto".to_string(), |e| format!("{e:?}")),
                step_size.map_or("auto".to_string(), |e| format!("{e:?}")),
            ),
            SamplerSpec::Subsample { k_variants, vicinity } => {
                format!("subsample(k={k_variants},keep={vicinity:?})")
            }
            SamplerSpec::Chain { stages } => format!(
                "chain({})",
                stages.iter().map(SamplerSpec::describe).collect::<Vec<_>>().join(">")
            ),
            other => other.name(),
        }
    }

    /// Whether the produced query set carries `(seed, derived)` pairs.
    pub fn produces_pairing(&self) -> bool {
        match self {
            SamplerSpec::Adversarial { .. } | SamplerSpec::Subsample { .. } => true,
            SamplerSpec::Chain { stages } => stages.last().is_some_and(SamplerSpec::produces_pairing),
            _ => false,
        }
    }

    pub fn needs_gradients(&self) -> bool {
        match self {
            SamplerSpec::Adversarial { .. } => true,
            SamplerSpec::Chain { stages } => stages.iter().any(SamplerSpec::needs_gradients),
            _ => false,
        }
    }

    /// How many seed-pool points this sampler consumes to emit `budget` queries.
    pub fn seeds_needed(&self, budget: usize) -> Result<usize> {
        match self {
            SamplerSpec::Uniform | SamplerSpec::Negative => Ok(budget),
            SamplerSpec::Adversarial { .. } => {
                if !budget.is_multiple_of(2) {
                    return Err(Error::BudgetShapeMismatch(format!(
                        "adversarial sampling needs an even budget, got {budget}"
                    )));
                }
                Ok(budget / 2)
            }
            SamplerSpec::Subsample { k_variants, .. } => {
                let group = 1 + k_variants;
                if !budget.is_multiple_of(group) {
                    return Err(Error::BudgetShapeMismatch(format!(
                        "budget {budget} is not a multiple of 1 + k_variants = {group}"
                    )));
                }
                Ok(budget / group)
            }
            SamplerSpec::Chain { stages } => stages
                .iter()
                .rev()
                .try_fold(budget, |need, stage| stage.seeds_needed(need)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SamplerSpec::Adversarial {
                epsilon, step_size, ..
            } => {
                for v in [epsilon, step_size].into_iter().flatten() {
                    if !(*v >= 0.0 && v.is_finite()) {
                        return Err(Error::InvalidConfig("adversarial radius and step must be finite and non-negative".into()));
                    }
                }
                Ok(())
            }
            SamplerSpec::Subsample { vicinity, .. } => {
                if !(0.0..=1.0).contains(vicinity) {
                    return Err(Error::InvalidConfig(format!("vicinity {vicinity} must lie in [0, 1]")));
                }
                Ok(())
            }
            SamplerSpec::Chain { stages } => {
                if stages.is_empty() {
                    return Err(Error::InvalidConfig("a chain needs at least one stage".into()));
                }
                stages.iter().try_for_each(SamplerSpec::validate)
            }
            _ => Ok(()),
        }
    }

    /// Draws `budget` queries for `victim` from `pool`. Deterministic in `seed`.
    pub fn sample(&self, pool: &LabeledDataset, victim: &ClassifierHandle, budget: usize, seed: u64) -> Result<QuerySet> {
        self.validate()?;
        let scale = mean_range(pool);
        let mut qs = self.sample_stage(pool, victim, budget, seed, scale)?;
        // Provenance records the full composite description.
        if matches!(self, SamplerSpec::Chain { .. }) {
            qs = QuerySet::new(
                qs.points().to_vec(),
                qs.labels().map(<[usize]>::to_vec),
                qs.pairing().map(<[(usize, usize)]>::to_vec),
                self.describe(),
                seed,
            )?;
        }
        Ok(qs)
    }

    fn sample_stage(&self, pool: &LabeledDataset, victim: &ClassifierHandle, budget: usize, seed: u64, scale: f64) -> Result<QuerySet> {
        match self {
            SamplerSpec::Uniform => uniform_sampler(pool, budget, seed),
            SamplerSpec::Negative => negative_sampler(pool, victim, budget, seed),
            SamplerSpec::Adversarial {
                epsilon,
                steps,
                step_size,
            } => {
                let eps = epsilon.unwrap_or(DEFAULT_EPSILON_FRACTION * scale);
                let cfg = PgdConfig {
                    epsilon: eps,
                    steps: *steps,
                    step_size: step_size.unwrap_or(eps / 8.0),
                };
                adversarial_sampler(pool, victim, &cfg, budget, seed)
            }
            SamplerSpec::Subsample { k_variants, vicinity } => subsampler(pool, *k_variants, *vicinity, budget, seed),
            SamplerSpec::Chain { stages } => {
                let mut budgets = vec![budget; stages.len()];
                for i in (0..stages.len() - 1).rev() {
                    budgets[i] = stages[i + 1].seeds_needed(budgets[i + 1])?;
                }
                let mut current = pool.clone();
                let mut out = None;
                for (i, stage) in stages.iter().enumerate() {
                    let qs = stage.sample_stage(&current, victim, budgets[i], seed::derive(seed, &[i as u64]), scale)?;
                    if i + 1 < stages.len() {
                        current = qs.to_pool(pool.dim(), pool.num_classes())?;
                    }
                    out = Some(qs);
                }
                Ok(out.expect("chain has at least one stage"))
            }
        }
    }
}

/// Mean over dimensions of `max − min` across the pool.
pub fn mean_range(pool: &LabeledDataset) -> f64 {
    if pool.is_empty() {
        return 0.0;
    }
    let b = pool.bounds();
    b.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / b.len() as f64
}

fn pick(pool_len: usize, budget: usize, seed: u64) -> Result<Vec<usize>> {
    if budget > pool_len {
        return Err(Error::BudgetExceedsPool {
            budget,
            pool: pool_len,
        });
    }
    let mut rng = seed::rng(seed);
    Ok(index::sample(&mut rng, pool_len, budget).into_vec())
}

fn from_indices(pool: &LabeledDataset, idx: &[usize], name: &str, seed: u64) -> Result<QuerySet> {
    let sub = pool.subset(idx);
    QuerySet::new(sub.points().to_vec(), Some(sub.labels().to_vec()), None, name.into(), seed)
}

/// `budget` points drawn from `pool` without replacement.
pub fn uniform_sampler(pool: &LabeledDataset, budget: usize, seed: u64) -> Result<QuerySet> {
    let idx = pick(pool.len(), budget, seed)?;
    from_indices(pool, &idx, "uniform", seed)
}

/// Indices of the points `h` misclassifies, in pool order.
pub fn misclassified(pool: &LabeledDataset, h: &ClassifierHandle) -> Vec<usize> {
    pool.iter()
        .enumerate()
        .filter(|(_, (x, y))| h.label(x) != *y)
        .map(|(i, _)| i)
        .collect()
}

/// `budget` points drawn uniformly from those `h` misclassifies.
pub fn negative_sampler(pool: &LabeledDataset, h: &ClassifierHandle, budget: usize, seed: u64) -> Result<QuerySet> {
    let wrong = misclassified(pool, h);
    if wrong.len() < budget {
        return Err(Error::InsufficientNegatives {
            needed: budget,
            available: wrong.len(),
        });
    }
    let picked = pick(wrong.len(), budget, seed)?;
    let idx: Vec<usize> = picked.into_iter().map(|i| wrong[i]).collect();
    from_indices(pool, &idx, "negative", seed)
}

/// `budget / 2` seeds followed by their adversarial counterparts, paired `(i, i + budget/2)`.
pub fn adversarial_sampler(pool: &LabeledDataset, h: &ClassifierHandle, cfg: &PgdConfig, budget: usize, seed: u64) -> Result<QuerySet> {
    if !h.access().permits(AccessLevel::Gradients) {
        return Err(Error::GradientRequired);
    }
    let half = SamplerSpec::adversarial().seeds_needed(budget)?;
    let idx = pick(pool.len(), half, seed)?;
    let seeds = pool.subset(&idx);
    let mut points = seeds.points().to_vec();
    let mut labels = seeds.labels().to_vec();
    for (x, y) in seeds.iter() {
        points.push(pgd_untargeted(h, x, cfg)?);
        labels.push(y);
    }
    let pairing = (0..half).map(|i| (i, i + half)).collect();
    let name = SamplerSpec::Adversarial {
        epsilon: Some(cfg.epsilon),
        steps: cfg.steps,
        step_size: Some(cfg.step_size),
    }
    .describe();
    QuerySet::new(points, Some(labels), Some(pairing), name, seed)
}

/// Seeds followed by `k_variants` masked copies of each; every coordinate of
/// a copy is kept with probability `vicinity` and zeroed otherwise.
pub fn subsampler(pool: &LabeledDataset, k_variants: usize, vicinity: f64, budget: usize, seed: u64) -> Result<QuerySet> {
    let spec = SamplerSpec::Subsample { k_variants, vicinity };
    spec.validate()?;
    let n_seeds = spec.seeds_needed(budget)?;
    let idx = pick(pool.len(), n_seeds, seed)?;
    let seeds = pool.subset(&idx);
    let mut rng = seed::rng(seed::derive(seed, &[seed::label("mask")]));
    let mut points = seeds.points().to_vec();
    let mut labels = seeds.labels().to_vec();
    let mut pairing = Vec::with_capacity(n_seeds * k_variants);
    for (s, (x, y)) in seeds.iter().enumerate() {
        for _ in 0..k_variants {
            let variant = x
                .iter()
                .map(|&v| if rng.random::<f64>() < vicinity { v } else { 0.0 })
                .collect();
            pairing.push((s, points.len()));
            points.push(variant);
            labels.push(y);
        }
    }
    QuerySet::new(points, Some(labels), Some(pairing), spec.describe(), seed)
}

/// Composes two samplers; the first stage's queries seed the second.
pub fn chain_sampler(first: SamplerSpec, second: SamplerSpec) -> SamplerSpec {
    SamplerSpec::chain(first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FnClassifier, LookupClassifier, Split};
    use crate::tinylearn::LinearClassifier;

    fn pool(n: usize) -> LabeledDataset {
        let pts = (0..n).map(|i| vec![i as f64, (i % 7) as f64 - 3.0]).collect();
        let ys = (0..n).map(|i| i % 3).collect();
        LabeledDataset::new(2, 3, pts, ys, Split::Test).unwrap()
    }

    fn key(p: &[f64]) -> Vec<u64> {
        p.iter().map(|v| v.to_bits()).collect()
    }

    #[test]
    fn uniform_full_budget_is_a_permutation() {
        let d = pool(40);
        let q = uniform_sampler(&d, 40, 3).unwrap();
        let mut got: Vec<_> = q.points().iter().map(|p| key(p)).collect();
        let mut want: Vec<_> = d.points().iter().map(|p| key(p)).collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
        assert!(q.pairing().is_none());
        assert_eq!(uniform_sampler(&d, 40, 3).unwrap(), q);
        assert!(matches!(uniform_sampler(&d, 41, 3), Err(Error::BudgetExceedsPool { .. })));
    }

    #[test]
    fn negatives_are_misclassified() {
        let d = pool(60);
        let h = ClassifierHandle::new("h", FnClassifier::new(3, 2, |x: &[f64]| (x[0] as usize / 2) % 3));
        let q = negative_sampler(&d, &h, 10, 1).unwrap();
        for (x, y) in q.points().iter().zip(q.labels().unwrap()) {
            assert_ne!(h.label(x), *y);
        }
        let available = misclassified(&d, &h).len();
        assert!(matches!(
            negative_sampler(&d, &h, available + 1, 1),
            Err(Error::InsufficientNegatives { available: a, .. }) if a == available
        ));
    }

    #[test]
    fn perfect_model_has_no_negatives() {
        let d = pool(10);
        let c = ClassifierHandle::new("c", LookupClassifier::ground_truth(&d));
        assert!(matches!(
            negative_sampler(&d, &c, 1, 0),
            Err(Error::InsufficientNegatives { available: 0, .. })
        ));
    }

    #[test]
    fn adversarial_shape_and_pairing() {
        let d = pool(30);
        let h = ClassifierHandle::new(
            "lin",
            LinearClassifier::new(vec![vec![0.1, 1.0], vec![-0.2, 0.3], vec![0.0, -1.0]], vec![0.0; 3]),
        );
        let q = adversarial_sampler(&d, &h, &PgdConfig::with_epsilon(0.5), 8, 4).unwrap();
        assert_eq!(q.len(), 8);
        assert_eq!(q.pairing().unwrap(), &[(0, 4), (1, 5), (2, 6), (3, 7)]);
        assert!(matches!(
            adversarial_sampler(&d, &h, &PgdConfig::with_epsilon(0.5), 7, 4),
            Err(Error::BudgetShapeMismatch(_))
        ));
        let f = ClassifierHandle::new("f", FnClassifier::new(3, 2, |_: &[f64]| 0));
        assert!(matches!(
            adversarial_sampler(&d, &f, &PgdConfig::with_epsilon(0.5), 8, 4),
            Err(Error::GradientRequired)
        ));
    }

    #[test]
    fn subsample_counts() {
        let d = pool(50);
        let q = subsampler(&d, 9, 0.5, 100, 2).unwrap();
        assert_eq!(q.len(), 100);
        assert_eq!(q.pairing().unwrap().len(), 90);
        let seeds_only = subsampler(&d, 0, 0.5, 10, 2).unwrap();
        assert_eq!(seeds_only.len(), 10);
        assert!(seeds_only.pairing().unwrap().is_empty());
        let keep_all = subsampler(&d, 3, 1.0, 20, 2).unwrap();
        for &(s, v) in keep_all.pairing().unwrap() {
            assert_eq!(keep_all.points()[s], keep_all.points()[v]);
        }
        assert!(matches!(subsampler(&d, 3, 0.5, 10, 2), Err(Error::BudgetShapeMismatch(_))));
    }

    #[test]
    fn chain_budget_propagation() {
        let c = SamplerSpec::chain(SamplerSpec::Negative, SamplerSpec::adversarial());
        assert_eq!(c.seeds_needed(100).unwrap(), 50);
        assert!(c.produces_pairing());
        assert!(!SamplerSpec::chain(SamplerSpec::adversarial(), SamplerSpec::Uniform).produces_pairing());
        assert_eq!(c.name(), "chain(negative>adversarial)");
    }

    #[test]
    fn spec_round_trips_through_json() {
        let c = SamplerSpec::chain(
            SamplerSpec::Negative,
            SamplerSpec::Subsample {
                k_variants: 3,
                vicinity: 0.75,
            },
        );
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<SamplerSpec>(&text).unwrap(), c);
        let adv: SamplerSpec = serde_json::from_str(r#"{"type":"adversarial"}"#).unwrap();
        assert_eq!(adv, SamplerSpec::adversarial());
    }
}
