//! Model-stealing detection toolkit.
//!
//! Fingerprinting schemes are assembled from three interchangeable parts: a
//! query sampler that picks the inputs sent to a suspected model, a
//! representation of the answers, and a detector that compares the victim's
//! representation with the suspect's. The [`harness`] builds benchmarks of
//! stolen and unrelated models from small in-process networks and measures
//! how well a scheme separates them.

pub mod error;
pub mod harness;
pub mod model;
pub mod qurd;
pub mod seed;
pub mod tinylearn;
pub mod variants;

pub use error::{Error, Result};

/// Toolkit version embedded into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
