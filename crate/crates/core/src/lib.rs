//! Deterministic building blocks for assembling and scoring security-domain
//! training corpora.
//!
//! The crate is organized around the lifecycle of a corpus record:
//!
//! * [`record`] defines the record schema, text normalization, JSONL I/O, and
//!   the per-stage run manifest.
//! * [`tokens`] provides token counting used by length checks and packing.
//! * [`ngram`] implements byte-level trigram language models used for
//!   perplexity filtering, language identification, and entropy scoring.
//! * [`dedup`] removes exact and near duplicates at the text and feature
//!   level.
//! * [`quality`] scores, filters, and scrubs individual records.
//! * [`aggregate`] clusters records and packs them into context windows.
//! * [`longctx`] synthesizes long-context documents from entropy anchors and
//!   interleaved distractors.
//! * [`schedule`] computes data-mixing, sequence-length, and replay weights
//!   over the course of a training run.
//! * [`rewards`] parses security annotations (CWE, CVSS, technique sets) and
//!   turns predictions into verifiable reward signals.
//! * [`rlmath`] contains group-relative policy optimization arithmetic,
//!   divergence-point masking, and gradient conflict projection.
//! * [`distill`] contains the alpha-beta divergence family and top-K
//!   selective distillation.
//!
//! Every function in this crate is deterministic: randomized steps take an
//! explicit seed and use a counter-based or ChaCha generator so results are
//! stable across platforms and runs.

pub mod aggregate;
pub mod dedup;
pub mod distill;
pub mod longctx;
pub mod ngram;
pub mod quality;
pub mod record;
pub mod rewards;
pub mod rlmath;
pub mod schedule;
pub mod tokens;

mod util;

pub use util::stable_digest;
