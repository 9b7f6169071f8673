//! Verifiable reward calculators for three security prediction tasks:
//! weakness classification (CWE exact match), severity prediction (CVSS
//! score plus metric components), and technique extraction (ATT&CK set F1).
//!
//! Predictions arrive either as structured values or as raw model text. Raw
//! text goes through a fixed extraction grammar: for scalar answers (a CWE
//! id, a CVSS vector) the last well-formed token in the text wins; for
//! technique sets every well-formed token is collected and deduplicated.
//! Malformed predictions score zero with a format flag rather than raising,
//! so batch scoring never aborts mid-rollout.

mod attack;
mod cvss;
mod cwe;
mod score;

pub use attack::TechniqueSet;
pub use cvss::{BaseMetric, CvssVector};
pub use cwe::CweId;
pub use score::{
    reward_ate, reward_rcm, reward_vsp, score_ate_text, score_ate_tokens, score_rcm_text,
    score_vsp_text, RewardOutcome, SCORE_TOLERANCE,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("no CWE identifier in {0:?}")]
    CweFormat(String),
    #[error("unsupported version prefix {0:?}")]
    UnsupportedVersion(String),
    #[error("malformed vector segment {0:?}")]
    MalformedSegment(String),
    #[error("unknown metric key {0}")]
    UnknownMetric(String),
    #[error("illegal value {value} for {metric}")]
    IllegalValue { metric: &'static str, value: String },
    #[error("duplicate metric {0}")]
    DuplicateMetric(&'static str),
    #[error("missing base metric {0}")]
    MissingMetric(&'static str),
    #[error("score {0} is outside [0, 10]")]
    ScoreOutOfRange(f64),
    #[error("gamma {0} is outside [0, 1]")]
    GammaOutOfRange(f64),
    #[error("technique token {0:?} is not canonical")]
    TechniqueFormat(String),
}
