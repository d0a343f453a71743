//! Benchmark and verification harness for the dynamic k-median engine:
//! seeded stream generation, replay with CSV/JSON metrics, and an
//! oracle-backed assertion replay.

pub mod jobs;
pub mod stream;
