use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabeledDataset, Split};

/// Where a query set came from: the sampler description, its seed and size.
///
/// Fingerprints are only comparable when their provenance matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub sampler: String,
    pub seed: u64,
    pub size: usize,
}

/// Ordered query points, optionally paired `(seed index, derived index)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    points: Vec<Vec<f64>>,
    /// Ground-truth labels carried over from the seed pool. Derived points
    /// inherit the label of the seed they came from.
    labels: Option<Vec<usize>>,
    pairing: Option<Vec<(usize, usize)>>,
    provenance: Provenance,
}

impl QuerySet {
    pub fn new(
        points: Vec<Vec<f64>>,
        labels: Option<Vec<usize>>,
        pairing: Option<Vec<(usize, usize)>>,
        sampler: String,
        seed: u64,
    ) -> Result<Self> {
        let n = points.len();
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::InvalidConfig(format!("{} labels for {n} query points", l.len())));
            }
        }
        if let Some(p) = &pairing {
            if let Some(&(i, j)) = p.iter().find(|&&(i, j)| i >= n || j >= n) {
                return Err(Error::InvalidConfig(format!("pair ({i}, {j}) out of range for {n} points")));
            }
        }
        Ok(Self {
            provenance: Provenance {
                sampler,
                seed,
                size: n,
            },
            points,
            labels,
            pairing,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn pairing(&self) -> Option<&[(usize, usize)]> {
        self.pairing.as_deref()
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Query budget `s`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reuses the queries as the seed pool of a later sampling stage.
    pub fn to_pool(&self, dim: usize, num_classes: usize) -> Result<LabeledDataset> {
        let labels = self.labels.clone().ok_or_else(|| {
            Error::IncompatibleScheme("stage output carries no labels to seed the next stage".into())
        })?;
        LabeledDataset::new(dim, num_classes, self.points.clone(), labels, Split::Test)
    }
}
