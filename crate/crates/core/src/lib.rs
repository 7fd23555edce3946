//! panelsim: interview-grounded participant simulation and concept-test
//! fidelity evaluation.
//!
//! The crate turns interview transcripts into per-participant simulated
//! respondents, administers a TAM/NPS/open-ended concept-test instrument to
//! them through a pluggable chat/embedding backend, and quantifies how
//! closely the simulated answers track the participants' own answers at the
//! individual level (error and agreement statistics with bootstrap
//! uncertainty) and the population level (ordinal Wasserstein distance over
//! response histograms), with an LLM-judge comparison for the open-ended
//! answers.
//!
//! Modules follow the pipeline:
//! - [`corpus`]: data model, validation, transcript segmentation, scoring
//! - [`gateway`]: chat/embedding backends, deterministic mock, cost ledger
//! - [`memory`]: per-participant embedded memory with exact MIPS retrieval
//! - [`agent`]: prompt rendering, reflection/answering, grounding variants
//! - [`metrics`]: MAE, accuracy, Gwet's AC2, Spearman, Wasserstein,
//!   bootstrap, Tukey HSD, optimal re-matching
//! - [`judge`]: pairwise LLM judging of open-ended answers
//! - [`pipeline`]: configuration, orchestration, and report emission

pub mod agent;
pub mod corpus;
pub mod demo;
pub mod gateway;
pub mod judge;
pub mod memory;
pub mod metrics;
pub mod pipeline;
