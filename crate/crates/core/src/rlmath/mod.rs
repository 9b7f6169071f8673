//! Policy-optimization kernels over plain numeric inputs: group-normalized
//! advantages, difficulty masking, a clipped surrogate loss with KL penalty,
//! preference divergence masks, and gradient surgery. Policies never appear
//! here; they are represented entirely by reward scalars, importance ratios,
//! and log-probability sequences supplied by the caller.

mod actionrl;
mod grpo;
mod pcgrad;

pub use actionrl::{branch_divergence_mask, DivergenceMask};
pub use grpo::{
    difficulty_mask, group_advantages, grpo_loss, kl_penalty, DifficultyVerdict, GrpoConfig,
    GrpoGroup, GrpoLoss, GrpoResponse,
};
pub use pcgrad::pcgrad;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RlMathError {
    #[error("reward group must hold at least one response")]
    EmptyGroup,
    #[error("group carries {rewards} rewards but {responses} responses")]
    GroupSizeMismatch { rewards: usize, responses: usize },
    #[error("response {response} has no tokens")]
    EmptyResponse { response: usize },
    #[error(
        "response {response} token arrays disagree: {ratios} ratios, {policy} policy \
         log-probs, {reference} reference log-probs"
    )]
    TokenLengthMismatch {
        response: usize,
        ratios: usize,
        policy: usize,
        reference: usize,
    },
    #[error("response {response} token {token} has importance ratio {value}, which is not positive")]
    NonPositiveRatio {
        response: usize,
        token: usize,
        value: f64,
    },
    #[error("log-probability sequences differ in length: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("clip width epsilon {0} must be positive")]
    InvalidEpsilon(f64),
    #[error("penalty coefficient lambda {0} must be nonnegative")]
    InvalidLambda(f64),
    #[error("difficulty band [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")]
    InvalidBand { lo: f64, hi: f64 },
    #[error("group size must be positive")]
    ZeroGroupSize,
    #[error("pass count {pass_count} exceeds group size {group}")]
    PassCountExceedsGroup { pass_count: usize, group: usize },
    #[error("{0} token sequence is empty")]
    EmptySequence(&'static str),
    #[error("gradient surgery needs at least 2 tasks, got {0}")]
    TooFewTasks(usize),
    #[error("gradient {index} has dimension {found}, expected {expected}")]
    GradientDimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
}
