//! Pipeline orchestration, synthetic corpora and figure rendering for the
//! `probe` command.

pub mod config;
pub mod pipeline;
pub mod render;
pub mod synth;
pub mod tools;

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "PROBE_WORKERS";
