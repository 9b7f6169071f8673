//! Entropy-guided long-context synthesis and hard-negative interleaving.
//!
//! A document's information gaps are token positions whose next-token
//! entropy stands out against the document's own entropy profile. For each
//! gap, retrieved candidate passages are kept only when prepending them
//! demonstrably reduces the gap's entropy by more than a threshold; the
//! surviving passages are shuffled and concatenated onto the source
//! document. A second synthesis mode stretches documents toward a target
//! length by interleaving distractor passages between the document's
//! paragraph-level meta-chunks.

mod oracle;
mod synth;

pub use oracle::{
    AdaptiveTrigramOracle, Candidate, CandidateRetriever, EmbeddingRetriever, EntropyOracle,
};
pub use synth::{
    find_entropy_anchors, interleave_hard_negatives, split_meta_chunks, synthesize_long_doc,
    verify_candidates, CandidateAudit, EntropyAnchor, Placement, VerificationOutcome,
    VerifiedDependency, PASSAGE_SEPARATOR,
};

/// Errors from anchor detection and synthesis.
#[derive(Debug, thiserror::Error)]
pub enum LongCtxError {
    #[error("document has no tokens")]
    EmptyDocument,
    #[error("no verified dependencies to synthesize from")]
    NoVerifiedDependencies,
    #[error("verified dependency names unknown candidate {0:?}")]
    UnknownCandidate(String),
    #[error("target length {target} is below the document's own {required} tokens")]
    TargetTooSmall { target: usize, required: usize },
}
