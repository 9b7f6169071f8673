//! Reward formulas and never-panicking batch scoring wrappers.

use serde::{Deserialize, Serialize};

use super::{CvssVector, CweId, RewardError, TechniqueSet};

/// Aggregate scores within this distance count as equal, matching the
/// one-decimal granularity of reported CVSS base scores.
pub const SCORE_TOLERANCE: f64 = 0.05;

/// Binary exact-match reward for CWE prediction.
pub fn reward_rcm(pred: &CweId, gold: &CweId) -> f64 {
    if pred == gold {
        1.0
    } else {
        0.0
    }
}

/// Severity reward: `gamma` times the aggregate-score indicator plus
/// `1 - gamma` times the fraction of the eight base metrics that match.
/// The indicator is 0 whenever either side lacks a score.
pub fn reward_vsp(
    pred: &CvssVector,
    gold: &CvssVector,
    gamma: f64,
) -> Result<f64, RewardError> {
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(RewardError::GammaOutOfRange(gamma));
    }
    let score_term = match (pred.score, gold.score) {
        (Some(p), Some(g)) if (p - g).abs() < SCORE_TOLERANCE => 1.0,
        _ => 0.0,
    };
    let component_term = pred.matching_components(gold) as f64 / 8.0;
    Ok(gamma * score_term + (1.0 - gamma) * component_term)
}

/// Set-level F1 reward for technique extraction. Two empty sets agree
/// vacuously and score 1.
pub fn reward_ate(pred: &TechniqueSet, gold: &TechniqueSet) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    let overlap = pred.intersection_size(gold) as f64;
    2.0 * overlap / (pred.len() + gold.len()) as f64
}

/// One scored prediction, ready for JSONL emission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardOutcome {
    pub id: String,
    pub task: String,
    pub reward: f64,
    /// False when the prediction was malformed or partially dropped.
    pub format_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl RewardOutcome {
    fn ok(id: &str, task: &str, reward: f64) -> Self {
        Self {
            id: id.to_owned(),
            task: task.to_owned(),
            reward,
            format_ok: true,
            note: None,
        }
    }

    fn flagged(id: &str, task: &str, reward: f64, note: String) -> Self {
        Self {
            id: id.to_owned(),
            task: task.to_owned(),
            reward,
            format_ok: false,
            note: Some(note),
        }
    }
}

/// Scores raw model text against a gold CWE id. Text without a CWE
/// identifier earns 0 with the format flag set.
pub fn score_rcm_text(id: &str, pred_text: &str, gold: &CweId) -> RewardOutcome {
    match CweId::extract(pred_text) {
        Some(pred) => RewardOutcome::ok(id, "rcm", reward_rcm(&pred, gold)),
        None => RewardOutcome::flagged(
            id,
            "rcm",
            0.0,
            "no CWE identifier in prediction".to_owned(),
        ),
    }
}

/// Scores raw model text plus an optional predicted aggregate score against
/// a gold vector. Text without a parseable vector earns 0 with the format
/// flag set; an out-of-range predicted score drops the score term and sets
/// the flag but still credits matching components.
pub fn score_vsp_text(
    id: &str,
    pred_text: &str,
    pred_score: Option<f64>,
    gold: &CvssVector,
    gamma: f64,
) -> Result<RewardOutcome, RewardError> {
    let Some(vector) = CvssVector::extract(pred_text) else {
        return Ok(RewardOutcome::flagged(
            id,
            "vsp",
            0.0,
            "no parseable CVSS v3.1 vector in prediction".to_owned(),
        ));
    };
    let (vector, score_note) = match pred_score {
        Some(score) => match vector.clone().with_score(score) {
            Ok(scored) => (scored, None),
            Err(err) => (vector, Some(err.to_string())),
        },
        None => (vector, None),
    };
    let reward = reward_vsp(&vector, gold, gamma)?;
    Ok(match score_note {
        Some(note) => RewardOutcome::flagged(id, "vsp", reward, note),
        None => RewardOutcome::ok(id, "vsp", reward),
    })
}

/// Scores raw model text against a gold technique set by extracting every
/// well-formed technique id.
pub fn score_ate_text(id: &str, pred_text: &str, gold: &TechniqueSet) -> RewardOutcome {
    let pred = TechniqueSet::extract(pred_text);
    RewardOutcome::ok(id, "ate", reward_ate(&pred, gold))
}

/// Scores a structured token list against a gold technique set. Malformed
/// tokens are dropped from the prediction and flagged.
pub fn score_ate_tokens<I, S>(id: &str, tokens: I, gold: &TechniqueSet) -> RewardOutcome
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let (pred, dropped) = TechniqueSet::parse_tokens(tokens);
    let reward = reward_ate(&pred, gold);
    if dropped == 0 {
        RewardOutcome::ok(id, "ate", reward)
    } else {
        RewardOutcome::flagged(
            id,
            "ate",
            reward,
            format!("{dropped} malformed technique tokens dropped"),
        )
    }
}
