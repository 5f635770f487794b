//! Query sampling, representation and detection.

mod akh;
mod detection;
pub mod pgd;
mod query;
mod representation;
pub mod sampler;
mod scheme;

pub use akh::{akh_test, AkhOutcome};
pub use detection::{
    calibrate_threshold, distance, fingerprint_distance, rms_distance, threshold_from_distances, CalibrationPool, Decision,
    DetectorSpec, Metric,
};
pub use pgd::{pgd_untargeted, PgdConfig};
pub use query::{Provenance, QuerySet};
pub use representation::{
    cosine_distance, fingerprint, query_answers, represent, Answers, Fingerprint, InnerDistance, Payload, RepresentationKind,
    RepresentationSpec,
};
pub use sampler::{
    adversarial_sampler, chain_sampler, mean_range, misclassified, negative_sampler, subsampler, uniform_sampler, SamplerSpec,
};
pub use scheme::{
    assemble_scheme, enumerate_schemes, standard_detectors, standard_representations, standard_samplers, FingerprintingScheme,
    SchemeSpec, DEFAULT_BUDGET,
};
