//! Synthetic classification tasks: Gaussian blobs, interleaved moons and
//! concentric rings.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabeledDataset, Split};
use crate::seed;

/// Largest class count each family supports.
const MAX_BLOB_CLASSES: usize = 64;
const MAX_RING_CLASSES: usize = 8;
/// Blob centres are drawn uniformly from `[-CENTER_BOX, CENTER_BOX]^d`.
const CENTER_BOX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskFamily {
    Blobs,
    Moons,
    Rings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTaskSpec {
    pub family: TaskFamily,
    pub num_classes: usize,
    pub dim: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Fraction of training labels flipped to a different class.
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
    /// Noise scale. Blobs: per-coordinate std. Moons/rings: 0.1 × spread is the std.
    #[serde(default = "default_spread")]
    pub spread: f64,
    /// Fixes the task geometry (blob centres).
    pub seed: u64,
    /// Fixes which points are drawn; defaults to a stream derived from `seed`.
    /// Two specs sharing `seed` but not `sample_seed` describe fresh samples
    /// from the same distribution.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_seed: Option<u64>,
}

fn default_label_noise() -> f64 {
    0.1
}

fn default_spread() -> f64 {
    1.0
}

impl SyntheticTaskSpec {
    pub fn blobs(num_classes: usize, dim: usize, n_train: usize, n_test: usize, seed: u64) -> Self {
        Self {
            family: TaskFamily::Blobs,
            num_classes,
            dim,
            n_train,
            n_test,
            label_noise: default_label_noise(),
            spread: default_spread(),
            seed,
            sample_seed: None,
        }
    }

    /// Same distribution, different draw.
    pub fn resampled(&self, sample_seed: u64) -> Self {
        Self {
            sample_seed: Some(sample_seed),
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(Error::InvalidConfig(format!(
                "label_noise {} must lie in [0, 0.5)",
                self.label_noise
            )));
        }
        if self.num_classes < 2 {
            return Err(Error::InfeasibleTask("need at least two classes".into()));
        }
        if self.dim == 0 {
            return Err(Error::InfeasibleTask("dimension must be at least 1".into()));
        }
        if !(self.spread >= 0.0 && self.spread.is_finite()) {
            return Err(Error::InvalidConfig("spread must be finite and non-negative".into()));
        }
        let limit = match self.family {
            TaskFamily::Blobs => MAX_BLOB_CLASSES,
            TaskFamily::Moons => 2,
            TaskFamily::Rings => MAX_RING_CLASSES,
        };
        if self.num_classes > limit {
            return Err(Error::InfeasibleTask(format!(
                "{:?} supports at most {limit} classes, asked for {}",
                self.family, self.num_classes
            )));
        }
        if matches!(self.family, TaskFamily::Moons | TaskFamily::Rings) && self.dim < 2 {
            return Err(Error::InfeasibleTask(format!(
                "{:?} needs at least 2 dimensions",
                self.family
            )));
        }
        Ok(())
    }
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws one point of class `y`.
fn sample_point<R: Rng>(spec: &SyntheticTaskSpec, centers: &[Vec<f64>], y: usize, rng: &mut R) -> Vec<f64> {
    let d = spec.dim;
    match spec.family {
        TaskFamily::Blobs => centers[y]
            .iter()
            .map(|&c| c + spec.spread * normal(rng))
            .collect(),
        TaskFamily::Moons | TaskFamily::Rings => {
            let noise = 0.1 * spec.spread;
            let t: f64 = rng.random::<f64>();
            let (a, b) = if spec.family == TaskFamily::Moons {
                let angle = std::f64::consts::PI * t;
                if y == 0 {
                    (angle.cos(), angle.sin())
                } else {
                    (1.0 - angle.cos(), 0.5 - angle.sin())
                }
            } else {
                let angle = std::f64::consts::TAU * t;
                let radius = (y + 1) as f64;
                (radius * angle.cos(), radius * angle.sin())
            };
            let mut x = Vec::with_capacity(d);
            x.push(a + noise * normal(rng));
            x.push(b + noise * normal(rng));
            x.extend((2..d).map(|_| noise * normal(rng)));
            x
        }
    }
}

/// Balanced classes in shuffled order.
fn draw<R: Rng>(spec: &SyntheticTaskSpec, centers: &[Vec<f64>], n: usize, split: Split, rng: &mut R) -> Result<LabeledDataset> {
    let c = spec.num_classes;
    let mut labels: Vec<usize> = (0..n).map(|i| i % c).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), rng);
    let points = labels
        .iter()
        .map(|&y| sample_point(spec, centers, y, rng))
        .collect();
    LabeledDataset::new(spec.dim, c, points, labels, split)
}

/// Generates `(train, test)`.
///
/// Exactly `floor(label_noise · n_train)` training labels are flipped, each
/// to a uniformly chosen different class; test labels are clean.
pub fn generate_task(spec: &SyntheticTaskSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let mut geo = seed::rng(seed::derive(spec.seed, &[seed::label("geometry")]));
    let centers: Vec<Vec<f64>> = (0..spec.num_classes)
        .map(|_| {
            (0..spec.dim)
                .map(|_| geo.random_range(-CENTER_BOX..=CENTER_BOX))
                .collect()
        })
        .collect();
    let sample_seed = spec
        .sample_seed
        .unwrap_or_else(|| seed::derive(spec.seed, &[seed::label("sample")]));
    let mut rng = seed::rng(sample_seed);
    let train = draw(spec, &centers, spec.n_train, Split::Train, &mut rng)?;
    let test = draw(spec, &centers, spec.n_test, Split::Test, &mut rng)?;

    let flips = (spec.label_noise * spec.n_train as f64).floor() as usize;
    let mut labels = train.labels().to_vec();
    for i in index::sample(&mut rng, spec.n_train, flips) {
        let shift = rng.random_range(1..spec.num_classes);
        labels[i] = (labels[i] + shift) % spec.num_classes;
    }
    Ok((train.relabel(labels)?, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_gives_identical_data() {
        let s = SyntheticTaskSpec::blobs(3, 4, 100, 50, 5);
        assert_eq!(generate_task(&s).unwrap(), generate_task(&s).unwrap());
        let other = s.resampled(99);
        assert_ne!(generate_task(&s).unwrap().0, generate_task(&other).unwrap().0);
    }

    #[test]
    fn respects_sizes_and_splits() {
        for family in [TaskFamily::Blobs, TaskFamily::Moons, TaskFamily::Rings] {
            let s = SyntheticTaskSpec {
                family,
                num_classes: 2,
                dim: 3,
                n_train: 37,
                n_test: 11,
                label_noise: 0.0,
                spread: 1.0,
                seed: 1,
                sample_seed: None,
            };
            let (tr, te) = generate_task(&s).unwrap();
            assert_eq!((tr.len(), te.len()), (37, 11));
            assert!(tr.splits().iter().all(|&s| s == Split::Train));
            assert!(te.splits().iter().all(|&s| s == Split::Test));
        }
    }

    #[test]
    fn flips_exactly_floor_fraction_of_train_labels() {
        let noisy = SyntheticTaskSpec {
            label_noise: 0.1,
            ..SyntheticTaskSpec::blobs(4, 3, 1000, 10, 8)
        };
        let clean = SyntheticTaskSpec {
            label_noise: 0.0,
            ..noisy.clone()
        };
        let (a, _) = generate_task(&noisy).unwrap();
        let (b, _) = generate_task(&clean).unwrap();
        assert_eq!(a.points(), b.points());
        let flipped = a.labels().iter().zip(b.labels()).filter(|(x, y)| x != y).count();
        assert_eq!(flipped, 100);

        let odd = SyntheticTaskSpec {
            label_noise: 0.123,
            n_train: 77,
            ..noisy
        };
        let (c, _) = generate_task(&odd).unwrap();
        let (d, _) = generate_task(&SyntheticTaskSpec { label_noise: 0.0, ..odd }).unwrap();
        let flipped = c.labels().iter().zip(d.labels()).filter(|(x, y)| x != y).count();
        assert_eq!(flipped, 9); // floor(0.123 * 77) = floor(9.471)
    }

    #[test]
    fn infeasible_class_counts() {
        let moons = SyntheticTaskSpec {
            family: TaskFamily::Moons,
            ..SyntheticTaskSpec::blobs(3, 2, 10, 10, 0)
        };
        assert!(matches!(generate_task(&moons), Err(Error::InfeasibleTask(_))));
        let rings = SyntheticTaskSpec {
            family: TaskFamily::Rings,
            ..SyntheticTaskSpec::blobs(9, 2, 10, 10, 0)
        };
        assert!(matches!(generate_task(&rings), Err(Error::InfeasibleTask(_))));
        let blobs = SyntheticTaskSpec::blobs(65, 2, 10, 10, 0);
        assert!(matches!(generate_task(&blobs), Err(Error::InfeasibleTask(_))));
        let noisy = SyntheticTaskSpec {
            label_noise: 0.5,
            ..SyntheticTaskSpec::blobs(2, 2, 10, 10, 0)
        };
        assert!(matches!(generate_task(&noisy), Err(Error::InvalidConfig(_))));
    }
}
