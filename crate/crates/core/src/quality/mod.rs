//! Record quality: composite scoring, heuristic filtering, and sensitive-
//! information scrubbing.
//!
//! The composite score weighs four judge-provided dimensions into one
//! number. The judge itself is external: this module validates, weights,
//! and aggregates scores but never invents them.

mod filter;
mod scrub;

pub use filter::{
    heuristic_filter, DropReason, FilterThresholds, FilterVerdict, LanguageClassifier,
    NgramPerplexity, PerplexityOracle, TrigramLanguageClassifier,
};
pub use scrub::{scrub_sensitive, RedactionSpan, ScrubReport, ScrubRules};

use serde::{Deserialize, Serialize};

/// The four scored dimensions, in canonical order.
pub const QUALITY_DIMENSIONS: [&str; 4] =
    ["alignment", "response_quality", "complexity", "safety"];

/// Validated per-dimension scores, weights, and their composite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScore {
    /// Per-dimension scores in `[0, 1]`, ordered as [`QUALITY_DIMENSIONS`].
    pub scores: [f64; 4],
    /// Nonnegative weights summing to 1.
    pub weights: [f64; 4],
    /// Weighted composite, in `[0, 1]`.
    pub q: f64,
}

/// Errors from score validation and filter configuration.
#[derive(Debug, thiserror::Error)]
pub enum QualityError {
    #[error("score for {dimension} is {value}, outside [0, 1]")]
    ScoreOutOfRange { dimension: &'static str, value: f64 },
    #[error("weight for {dimension} is negative: {value}")]
    NegativeWeight { dimension: &'static str, value: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: f64 },
    #[error("min_len {min_len} exceeds max_len {max_len}")]
    MinExceedsMax { min_len: usize, max_len: usize },
    #[error("max_perplexity must be positive, got {0}")]
    NonPositivePerplexityBound(f64),
}

/// Combines four dimension scores into the weighted composite `Q`.
///
/// Scores must lie in `[0, 1]`; weights must be nonnegative and sum to 1
/// (within 1e-9). The result is a convex combination, so `Q` always lies
/// between the smallest and largest score.
pub fn composite_quality(scores: [f64; 4], weights: [f64; 4]) -> Result<QualityScore, QualityError> {
    for (k, &s) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) || s.is_nan() {
            return Err(QualityError::ScoreOutOfRange {
                dimension: QUALITY_DIMENSIONS[k],
                value: s,
            });
        }
    }
    let mut sum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w < 0.0 || w.is_nan() {
            return Err(QualityError::NegativeWeight {
                dimension: QUALITY_DIMENSIONS[k],
                value: w,
            });
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(QualityError::WeightsNotNormalized { sum });
    }
    let q = scores.iter().zip(&weights).map(|(s, w)| s * w).sum();
    Ok(QualityScore {
        scores,
        weights,
        q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_scores_give_unit_composite() {
        for weights in [
            [0.25, 0.25, 0.25, 0.25],
            [0.7, 0.1, 0.1, 0.1],
            [0.0, 0.0, 0.0, 1.0],
        ] {
            let qs = composite_quality([1.0, 1.0, 1.0, 1.0], weights).unwrap();
            assert!((qs.q - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_weights_hand_example() {
        let qs = composite_quality([0.8, 0.6, 0.4, 1.0], [0.25; 4]).unwrap();
        assert!((qs.q - 0.70).abs() < 1e-12);
    }

    #[test]
    fn safety_only_weighting_projects_the_safety_score() {
        let qs = composite_quality([0.9, 0.9, 0.9, 0.2], [0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!((qs.q - 0.2).abs() < 1e-12);
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(matches!(
            composite_quality([1.2, 0.5, 0.5, 0.5], [0.25; 4]),
            Err(QualityError::ScoreOutOfRange { .. })
        ));
        assert!(matches!(
            composite_quality([0.5; 4], [-0.1, 0.5, 0.3, 0.3]),
            Err(QualityError::NegativeWeight { .. })
        ));
        assert!(matches!(
            composite_quality([0.5; 4], [0.3, 0.3, 0.3, 0.3]),
            Err(QualityError::WeightsNotNormalized { .. })
        ));
    }

    #[test]
    fn composite_stays_between_score_extremes() {
        let scores = [0.15, 0.6, 0.35, 0.9];
        for weights in [
            [0.25, 0.25, 0.25, 0.25],
            [0.5, 0.5, 0.0, 0.0],
            [0.1, 0.2, 0.3, 0.4],
        ] {
            let qs = composite_quality(scores, weights).unwrap();
            assert!(qs.q >= 0.15 - 1e-12 && qs.q <= 0.9 + 1e-12);
        }
    }
}
