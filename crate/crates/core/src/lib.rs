//! Consonant-induced F0 perturbation probing: corpus ingestion, pitch
//! tracking, vowel token extraction, lexical strata, a penalized additive
//! model engine with AR1 residuals, and onset-class difference smooths.

pub mod annotation;
pub mod gam;
pub mod inventory;
pub mod pitch;
pub mod probe;
pub mod strata;
pub mod tokens;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
