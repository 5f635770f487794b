//! Assembling a sampler, a representation and a detector into one scheme.

use serde::{Deserialize, Serialize};

use super::detection::{calibrate_threshold, distance, CalibrationPool, Decision, DetectorSpec, Metric};
use super::query::QuerySet;
use super::representation::{fingerprint, Fingerprint, InnerDistance, RepresentationKind, RepresentationSpec};
use super::sampler::SamplerSpec;
use crate::error::{Error, Result};
use crate::model::{AccessLevel, ClassifierHandle, LabeledDataset, Split};

pub const DEFAULT_BUDGET: usize = 100;

fn default_budget() -> usize {
    DEFAULT_BUDGET
}

fn default_split() -> Split {
    Split::Test
}

/// JSON-serializable description of a fingerprinting scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub sampler: SamplerSpec,
    pub representation: RepresentationSpec,
    #[serde(default)]
    pub detector: DetectorSpec,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Which split of the victim's data seeds the query sampler.
    #[serde(default = "default_split")]
    pub seed_split: Split,
}

impl SchemeSpec {
    pub fn new(sampler: SamplerSpec, representation: RepresentationSpec, detector: DetectorSpec) -> Self {
        Self {
            name: None,
            sampler,
            representation,
            detector,
            budget: DEFAULT_BUDGET,
            seed_split: Split::Test,
        }
    }

    /// Negative queries, raw labels, Hamming distance and a majority vote.
    pub fn akh() -> Self {
        Self {
            name: Some("akh".into()),
            ..Self::new(
                SamplerSpec::Negative,
                RepresentationSpec::raw_labels(),
                DetectorSpec {
                    metric: Metric::Default,
                    decision: Decision::Majority,
                },
            )
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Explicit name, or one derived from the components.
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            let det = match (self.detector.metric, self.detector.decision) {
                (Metric::Default, Decision::Majority) => "majority".to_string(),
                (Metric::Rms, Decision::Majority) => "rms-majority".to_string(),
                (Metric::Default, Decision::Calibrated { target_fpr }) => format!("calibrated@{target_fpr}"),
                (Metric::Rms, Decision::Calibrated { target_fpr }) => format!("rms-calibrated@{target_fpr}"),
            };
            format!("{}/{}/{}", self.sampler.name(), self.representation.name(), det)
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.sampler.validate()?;
        if self.budget == 0 {
            return Err(Error::IncompatibleScheme("budget must be positive".into()));
        }
        self.sampler
            .seeds_needed(self.budget)
            .map_err(|e| Error::IncompatibleScheme(e.to_string()))?;
        if self.representation.kind == RepresentationKind::Pairwise && !self.sampler.produces_pairing() {
            return Err(Error::IncompatibleScheme(format!(
                "pairwise representation needs a pairing sampler, {} produces none",
                self.sampler.name()
            )));
        }
        if let Decision::Calibrated { target_fpr } = self.detector.decision {
            if !(0.0..=1.0).contains(&target_fpr) {
                return Err(Error::IncompatibleScheme(format!("target_fpr {target_fpr} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A validated scheme ready to score model pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FingerprintingScheme {
    spec: SchemeSpec,
}

pub fn assemble_scheme(spec: SchemeSpec) -> Result<FingerprintingScheme> {
    spec.validate()?;
    Ok(FingerprintingScheme { spec })
}

impl FingerprintingScheme {
    pub fn spec(&self) -> &SchemeSpec {
        &self.spec
    }

    pub fn name(&self) -> String {
        self.spec.label()
    }

    pub fn budget(&self) -> usize {
        self.spec.budget
    }

    /// Same scheme at a different budget.
    pub fn with_budget(&self, budget: usize) -> Result<Self> {
        assemble_scheme(self.spec.clone().with_budget(budget))
    }

    /// Access the victim must grant for query generation.
    pub fn victim_access(&self) -> AccessLevel {
        if self.spec.sampler.needs_gradients() {
            AccessLevel::Gradients
        } else {
            self.suspect_access()
        }
    }

    /// Access any queried model must grant for its fingerprint.
    pub fn suspect_access(&self) -> AccessLevel {
        if self.spec.representation.needs_probits() {
            AccessLevel::Probits
        } else {
            AccessLevel::LabelOnly
        }
    }

    pub fn check_access(&self, model: &ClassifierHandle, required: AccessLevel) -> Result<()> {
        if model.access().permits(required) {
            Ok(())
        } else {
            Err(Error::AccessInsufficient(format!(
                "{} grants {:?}, scheme {} needs {:?}",
                model.id(),
                model.access(),
                self.name(),
                required
            )))
        }
    }

    /// Queries for `victim`, drawn from `seed_set`.
    pub fn query_set(&self, victim: &ClassifierHandle, seed_set: &LabeledDataset, seed: u64) -> Result<QuerySet> {
        self.check_access(victim, self.victim_access())?;
        self.spec.sampler.sample(seed_set, victim, self.spec.budget, seed)
    }

    pub fn fingerprint(&self, model: &ClassifierHandle, queries: &QuerySet) -> Result<Fingerprint> {
        self.check_access(model, self.suspect_access())?;
        fingerprint(model, queries, &self.spec.representation)
    }

    pub fn distance(&self, a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
        distance(self.spec.detector.metric, a, b)
    }

    /// Distance between victim and suspect on a fresh query set; lower is more suspicious.
    pub fn score(&self, victim: &ClassifierHandle, suspect: &ClassifierHandle, seed_set: &LabeledDataset, seed: u64) -> Result<f64> {
        let queries = self.query_set(victim, seed_set, seed)?;
        let fv = self.fingerprint(victim, &queries)?;
        let fs = self.fingerprint(suspect, &queries)?;
        self.distance(&fv, &fs)
    }

    /// Decision threshold: 1/2 under the majority rule, else calibrated on `pool`.
    pub fn threshold(&self, victim_fp: &Fingerprint, pool: Option<&CalibrationPool>) -> Result<f64> {
        match self.spec.detector.decision {
            Decision::Majority => Ok(0.5),
            Decision::Calibrated { target_fpr } => {
                let pool = pool.ok_or(Error::EmptyCalibrationPool)?;
                calibrate_threshold(victim_fp, pool, target_fpr, self.spec.detector.metric)
            }
        }
    }

    /// `true` means the suspect is judged stolen.
    pub fn decide(&self, distance: f64, threshold: f64) -> bool {
        distance < threshold
    }
}

/// Samplers used when enumerating schemes.
pub fn standard_samplers() -> Vec<SamplerSpec> {
    vec![
        SamplerSpec::Uniform,
        SamplerSpec::Negative,
        SamplerSpec::adversarial(),
        SamplerSpec::Subsample {
            k_variants: 4,
            vicinity: 0.8,
        },
        SamplerSpec::chain(SamplerSpec::Negative, SamplerSpec::adversarial()),
        SamplerSpec::chain(
            SamplerSpec::Negative,
            SamplerSpec::Subsample {
                k_variants: 4,
                vicinity: 0.8,
            },
        ),
    ]
}

pub fn standard_representations() -> Vec<RepresentationSpec> {
    vec![
        RepresentationSpec::raw_labels(),
        RepresentationSpec::new(RepresentationKind::RawProbits, InnerDistance::Cosine),
        RepresentationSpec::new(RepresentationKind::Pairwise, InnerDistance::Cosine),
        RepresentationSpec::new(RepresentationKind::Pairwise, InnerDistance::Disagreement),
        RepresentationSpec::new(RepresentationKind::Listwise, InnerDistance::Cosine),
        RepresentationSpec::new(RepresentationKind::Listwise, InnerDistance::Disagreement),
    ]
}

pub fn standard_detectors() -> Vec<DetectorSpec> {
    vec![
        DetectorSpec {
            metric: Metric::Default,
            decision: Decision::Majority,
        },
        DetectorSpec {
            metric: Metric::Default,
            decision: Decision::Calibrated { target_fpr: 0.05 },
        },
    ]
}

/// Every valid combination of the standard components at `budget`.
pub fn enumerate_schemes(budget: usize) -> Vec<FingerprintingScheme> {
    let mut out = Vec::new();
    for sampler in standard_samplers() {
        for representation in standard_representations() {
            for detector in standard_detectors() {
                let spec = SchemeSpec::new(sampler.clone(), representation, detector).with_budget(budget);
                if let Ok(scheme) = assemble_scheme(spec) {
                    out.push(scheme);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_needs_pairing_sampler() {
        let spec = SchemeSpec::new(
            SamplerSpec::Uniform,
            RepresentationSpec::new(RepresentationKind::Pairwise, InnerDistance::Cosine),
            DetectorSpec::default(),
        );
        assert!(matches!(assemble_scheme(spec), Err(Error::IncompatibleScheme(_))));
    }

    #[test]
    fn odd_budget_rejected_for_adversarial() {
        let spec = SchemeSpec::new(SamplerSpec::adversarial(), RepresentationSpec::raw_labels(), DetectorSpec::default()).with_budget(11);
        assert!(matches!(assemble_scheme(spec), Err(Error::IncompatibleScheme(_))));
    }

    #[test]
    fn enumeration_is_large_enough() {
        let schemes = enumerate_schemes(100);
        assert!(schemes.len() >= 24, "{}", schemes.len());
        let mut names: Vec<_> = schemes.iter().map(FingerprintingScheme::name).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), schemes.len());
    }

    #[test]
    fn json_round_trip() {
        for scheme in enumerate_schemes(100) {
            let text = scheme.spec().to_json().unwrap();
            assert_eq!(&SchemeSpec::from_json(&text).unwrap(), scheme.spec());
        }
        let minimal = r#"{"sampler":{"type":"negative"},"representation":{"kind":"raw_labels","inner":"disagreement"}}"#;
        let spec = SchemeSpec::from_json(minimal).unwrap();
        assert_eq!(spec.budget, 100);
        assert_eq!(spec.seed_split, Split::Test);
    }
}
