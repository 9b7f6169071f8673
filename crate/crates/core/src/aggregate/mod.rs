//! Correlated-information aggregation.
//!
//! Records are clustered hierarchically by embedding similarity, packed
//! into token-budgeted context windows that trade semantic coherence
//! against source-category diversity, and reordered so the most
//! informative records lead each window.

mod cluster;
mod window;

pub use cluster::{cluster_hierarchical, ClusterTree};
pub use window::{build_context_windows, TrainingSequence, WindowBuild};

use serde::{Deserialize, Serialize};

/// Errors from clustering, window assembly, and reordering.
#[derive(Debug, thiserror::Error)]
pub enum AggregateError {
    #[error("{ids} ids but {values} {what}")]
    LengthMismatch {
        ids: usize,
        values: usize,
        what: &'static str,
    },
    #[error("embeddings have mixed dimensions: {0} and {1}")]
    MixedDimensions(usize, usize),
    #[error("levels must be at least 1")]
    ZeroLevels,
    #[error("branching must be at least 2")]
    BranchingTooSmall,
    #[error("token budget must be at least 1")]
    ZeroBudget,
    #[error("diversity weight {0} outside [0, 1]")]
    InvalidDiversityWeight(f64),
    #[error("{expected} records but {found} scores")]
    ScoreCountMismatch { expected: usize, found: usize },
    #[error("score at position {0} is not finite")]
    NonFiniteScore(usize),
}

/// Reorders a training sequence so higher-scored records come first.
///
/// The sort is stable: ties keep their original relative order, so equal
/// scores leave the sequence unchanged. `scores` align with the sequence's
/// current record order; the returned sequence carries them re-aligned to
/// the emitted order.
pub fn reorder_by_informativeness(
    sequence: &TrainingSequence,
    scores: &[f64],
) -> Result<TrainingSequence, AggregateError> {
    if scores.len() != sequence.record_ids.len() {
        return Err(AggregateError::ScoreCountMismatch {
            expected: sequence.record_ids.len(),
            found: scores.len(),
        });
    }
    if let Some(bad) = scores.iter().position(|s| !s.is_finite()) {
        return Err(AggregateError::NonFiniteScore(bad));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    Ok(TrainingSequence {
        record_ids: order.iter().map(|&i| sequence.record_ids[i].clone()).collect(),
        token_budget: sequence.token_budget,
        total_tokens: sequence.total_tokens,
        scores: order.iter().map(|&i| scores[i]).collect(),
        diversity_profile: sequence.diversity_profile.clone(),
    })
}

/// Serializable cluster assignment row used by sequence artifacts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// Record id.
    pub id: String,
    /// Cluster path id at each level, coarse to fine.
    pub path: Vec<u64>,
}
