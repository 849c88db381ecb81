//! Trace-driven analysis of RV64GC instruction streams.
//!
//! The pipeline is: decode weighted instruction histograms ([`trace`]),
//! split them into straight-line blocks, find macro-op fusion idioms and
//! near-miss pairs ([`fusion`]), and aggregate dynamic counts, bytes and
//! cross-ISA comparisons ([`metrics`]). [`analysis`] runs the per-block work
//! across threads when the `parallel` feature is enabled.

pub mod analysis;
pub mod decoder;
pub mod fusion;
pub mod metrics;
pub mod trace;
