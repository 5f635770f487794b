//! Representations of a model's answers on a query set.

use serde::{Deserialize, Serialize};

use super::query::{Provenance, QuerySet};
use crate::error::{Error, Result};
use crate::model::ClassifierHandle;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepresentationKind {
    RawLabels,
    RawProbits,
    /// One distance per `(seed, derived)` pair.
    Pairwise,
    /// Distances between all pairs of answers.
    Listwise,
}

/// Distance between two answers inside a pairwise or listwise representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerDistance {
    /// `1 − cos` between probit vectors.
    Cosine,
    /// 0/1 label disagreement.
    Disagreement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RepresentationSpec {
    pub kind: RepresentationKind,
    #[serde(default = "default_inner")]
    pub inner: InnerDistance,
}

fn default_inner() -> InnerDistance {
    InnerDistance::Cosine
}

impl RepresentationSpec {
    pub fn new(kind: RepresentationKind, inner: InnerDistance) -> Self {
        Self { kind, inner }
    }

    pub fn raw_labels() -> Self {
        Self::new(RepresentationKind::RawLabels, InnerDistance::Disagreement)
    }

    pub fn needs_probits(&self) -> bool {
        match self.kind {
            RepresentationKind::RawLabels => false,
            RepresentationKind::RawProbits => true,
            RepresentationKind::Pairwise | RepresentationKind::Listwise => self.inner == InnerDistance::Cosine,
        }
    }

    pub fn name(&self) -> String {
        match self.kind {
            RepresentationKind::RawLabels => "raw_labels".into(),
            RepresentationKind::RawProbits => "raw_probits".into(),
            RepresentationKind::Pairwise | RepresentationKind::Listwise => {
                let kind = if self.kind == RepresentationKind::Pairwise { "pairwise" } else { "listwise" };
                let inner = match self.inner {
                    InnerDistance::Cosine => "cosine",
                    InnerDistance::Disagreement => "labels",
                };
                format!("{kind}_{inner}")
            }
        }
    }
}

/// A model's raw answers on a query set.
#[derive(Debug, Clone, PartialEq)]
pub struct Answers {
    pub labels: Vec<usize>,
    pub probits: Option<Vec<Vec<f64>>>,
}

/// Queries `model` on every point of `queries`.
pub fn query_answers(model: &ClassifierHandle, queries: &QuerySet, with_probits: bool) -> Result<Answers> {
    let labels = model.labels(queries.points());
    let probits = if with_probits {
        Some(
            queries
                .points()
                .iter()
                .map(|x| model.probits(x))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(Answers { labels, probits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Labels { values: Vec<usize> },
    /// Row-major `rows × cols`.
    Probits { rows: usize, cols: usize, values: Vec<f64> },
    Vector { values: Vec<f64> },
    /// Row-major `n × n`.
    Matrix { n: usize, values: Vec<f64> },
}

impl Payload {
    /// Flattened real values; labels are returned as `None`.
    pub fn reals(&self) -> Option<&[f64]> {
        match self {
            Payload::Labels { .. } => None,
            Payload::Probits { values, .. } | Payload::Vector { values } | Payload::Matrix { values, .. } => Some(values),
        }
    }
}

/// Compact representation `Z_h` of a model's answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub kind: RepresentationKind,
    pub payload: Payload,
    pub provenance: Provenance,
}

/// `1 − cos(a, b)`; zero vectors are at distance 0 from each other and 1 from anything else.
pub fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    match (na == 0.0, nb == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        _ => (1.0 - dot / (na * nb)).max(0.0),
    }
}

fn inner_distance(answers: &Answers, inner: InnerDistance, i: usize, j: usize) -> Result<f64> {
    match inner {
        InnerDistance::Disagreement => Ok(f64::from(u8::from(answers.labels[i] != answers.labels[j]))),
        InnerDistance::Cosine => {
            let p = answers
                .probits
                .as_ref()
                .ok_or_else(|| Error::AccessInsufficient("cosine inner distance needs probits".into()))?;
            Ok(cosine_distance(&p[i], &p[j]))
        }
    }
}

/// Builds the fingerprint of `answers` on `queries`.
pub fn represent(answers: &Answers, queries: &QuerySet, spec: &RepresentationSpec) -> Result<Fingerprint> {
    let s = queries.len();
    if answers.labels.len() != s {
        return Err(Error::InvalidConfig(format!("{} answers for {s} queries", answers.labels.len())));
    }
    let payload = match spec.kind {
        RepresentationKind::RawLabels => Payload::Labels {
            values: answers.labels.clone(),
        },
        RepresentationKind::RawProbits => {
            let p = answers
                .probits
                .as_ref()
                .ok_or_else(|| Error::AccessInsufficient("raw probits representation needs probits".into()))?;
            let cols = p.first().map_or(0, Vec::len);
            Payload::Probits {
                rows: s,
                cols,
                values: p.concat(),
            }
        }
        RepresentationKind::Pairwise => {
            let pairs = queries.pairing().ok_or(Error::PairingRequired)?;
            Payload::Vector {
                values: pairs
                    .iter()
                    .map(|&(i, j)| inner_distance(answers, spec.inner, i, j))
                    .collect::<Result<_>>()?,
            }
        }
        RepresentationKind::Listwise => {
            let mut values = vec![0.0; s * s];
            for i in 0..s {
                for j in (i + 1)..s {
                    let d = inner_distance(answers, spec.inner, i, j)?;
                    values[i * s + j] = d;
                    values[j * s + i] = d;
                }
            }
            Payload::Matrix { n: s, values }
        }
    };
    Ok(Fingerprint {
        kind: spec.kind,
        payload,
        provenance: queries.provenance().clone(),
    })
}

/// Queries `model` and builds its fingerprint in one step.
pub fn fingerprint(model: &ClassifierHandle, queries: &QuerySet, spec: &RepresentationSpec) -> Result<Fingerprint> {
    if spec.kind == RepresentationKind::Pairwise && queries.pairing().is_none() {
        return Err(Error::PairingRequired);
    }
    let answers = query_answers(model, queries, spec.needs_probits())?;
    represent(&answers, queries, spec)
}
