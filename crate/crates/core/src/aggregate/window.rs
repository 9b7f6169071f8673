//! Greedy complementarity-aware context-window assembly.
//!
//! Each window opens with the first unassigned record in input order and
//! grows greedily: the next pick maximizes a convex blend of cosine
//! similarity to the window's embedding centroid and source-category
//! novelty. When the best pick would overflow the token budget the window
//! closes and the next one opens. Records that alone exceed the budget are
//! reported and skipped.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::AggregateError;
use crate::record::CorpusRecord;
use crate::tokens::TokenCounter;
use crate::util::dense_cosine;

/// An assembled multi-record context window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSequence {
    /// Record ids in emitted order.
    pub record_ids: Vec<String>,
    /// Budget the window was packed against.
    pub token_budget: usize,
    /// Sum of member token counts; never exceeds the budget.
    pub total_tokens: usize,
    /// Per-record informativeness, aligned with `record_ids`.
    pub scores: Vec<f64>,
    /// Member count per source category.
    pub diversity_profile: BTreeMap<String, u64>,
}

/// Result of window assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBuild {
    /// Windows in construction order; together they partition the
    /// non-skipped records.
    pub windows: Vec<TrainingSequence>,
    /// Ids of records whose token count alone exceeds the budget.
    pub skipped: Vec<String>,
}

/// Packs records into token-budgeted windows.
///
/// `informativeness` aligns with `records` and is carried into the emitted
/// sequences. The `seed` parameter is part of the stable signature for
/// alternative assembly strategies; the shipped greedy strategy is fully
/// deterministic and does not consume it.
pub fn build_context_windows(
    records: &[CorpusRecord],
    informativeness: &[f64],
    budget: usize,
    diversity_weight: f64,
    _seed: u64,
    counter: &dyn TokenCounter,
) -> Result<WindowBuild, AggregateError> {
    if informativeness.len() != records.len() {
        return Err(AggregateError::ScoreCountMismatch {
            expected: records.len(),
            found: informativeness.len(),
        });
    }
    if budget == 0 {
        return Err(AggregateError::ZeroBudget);
    }
    if !(0.0..=1.0).contains(&diversity_weight) {
        return Err(AggregateError::InvalidDiversityWeight(diversity_weight));
    }

    let token_counts: Vec<usize> = records.iter().map(|r| counter.count(&r.text)).collect();
    let mut skipped = Vec::new();
    let mut unassigned: Vec<usize> = Vec::new();
    for (i, record) in records.iter().enumerate() {
        if token_counts[i] > budget {
            skipped.push(record.id.clone());
        } else {
            unassigned.push(i);
        }
    }

    let mut windows = Vec::new();
    while !unassigned.is_empty() {
        let seed_record = unassigned.remove(0);
        let mut member_indices = vec![seed_record];
        let mut window_tokens = token_counts[seed_record];
        let mut categories: BTreeMap<String, u64> = BTreeMap::new();
        *categories
            .entry(records[seed_record].source_category.as_str().to_owned())
            .or_insert(0) += 1;
        let mut centroid: Option<Vec<f64>> = records[seed_record].embedding.clone();

        loop {
            let mut best: Option<(usize, f64)> = None;
            for (pos, &candidate) in unassigned.iter().enumerate() {
                let similarity = match (&centroid, &records[candidate].embedding) {
                    (Some(c), Some(e)) => dense_cosine(e, c),
                    _ => 0.0,
                };
                let category = records[candidate].source_category.as_str();
                let novelty = if categories.contains_key(category) { 0.0 } else { 1.0 };
                let score = (1.0 - diversity_weight) * similarity + diversity_weight * novelty;
                let better = match best {
                    None => true,
                    Some((_, best_score)) => score > best_score,
                };
                if better {
                    best = Some((pos, score));
                }
            }
            let Some((pos, _)) = best else { break };
            let pick = unassigned[pos];
            if window_tokens + token_counts[pick] > budget {
                break;
            }
            unassigned.remove(pos);
            member_indices.push(pick);
            window_tokens += token_counts[pick];
            *categories
                .entry(records[pick].source_category.as_str().to_owned())
                .or_insert(0) += 1;
            if let Some(e) = &records[pick].embedding {
                match &mut centroid {
                    Some(c) => {
                        for (acc, &x) in c.iter_mut().zip(e) {
                            *acc += x;
                        }
                    }
                    None => centroid = Some(e.clone()),
                }
            }
        }

        windows.push(TrainingSequence {
            record_ids: member_indices.iter().map(|&i| records[i].id.clone()).collect(),
            token_budget: budget,
            total_tokens: window_tokens,
            scores: member_indices.iter().map(|&i| informativeness[i]).collect(),
            diversity_profile: categories,
        });
    }

    Ok(WindowBuild { windows, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceCategory;
    use crate::tokens::InflatedWhitespaceCounter;

    fn record(id: &str, words: usize, category: SourceCategory, embedding: Vec<f64>) -> CorpusRecord {
        let text = (0..words).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        let mut r = CorpusRecord::new(id, text, category);
        r.embedding = Some(embedding);
        r
    }

    fn counter() -> InflatedWhitespaceCounter {
        InflatedWhitespaceCounter::default()
    }

    #[test]
    fn everything_fits_one_window() {
        let records = vec![
            record("a", 10, SourceCategory::Log, vec![1.0, 0.0]),
            record("b", 10, SourceCategory::Code, vec![0.9, 0.1]),
            record("c", 10, SourceCategory::Product, vec![0.8, 0.2]),
        ];
        let build =
            build_context_windows(&records, &[0.0; 3], 1000, 0.5, 0, &counter()).unwrap();
        assert_eq!(build.windows.len(), 1);
        assert_eq!(build.windows[0].record_ids.len(), 3);
        assert!(build.skipped.is_empty());
        assert_eq!(build.windows[0].total_tokens, 39);
        assert_eq!(build.windows[0].diversity_profile.len(), 3);
    }

    #[test]
    fn zero_diversity_weight_matches_similarity_greedy_oracle() {
        let embeddings = [
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.95, 0.05, 0.0],
            vec![0.1, 0.9, 0.1],
            vec![0.92, 0.0, 0.1],
            vec![0.0, 0.2, 0.98],
        ];
        let records: Vec<CorpusRecord> = embeddings
            .iter()
            .enumerate()
            .map(|(i, e)| record(&format!("r{i}"), 5, SourceCategory::Log, e.clone()))
            .collect();
        let build =
            build_context_windows(&records, &[0.0; 6], 10_000, 0.0, 0, &counter()).unwrap();
        assert_eq!(build.windows.len(), 1);

        // Independent greedy re-implementation: repeatedly take the
        // unpicked record with the highest cosine to the running centroid.
        let mut remaining: Vec<usize> = (1..6).collect();
        let mut picked = vec![0usize];
        let mut centroid = embeddings[0].clone();
        while !remaining.is_empty() {
            let mut best = (0usize, f64::NEG_INFINITY);
            for (pos, &i) in remaining.iter().enumerate() {
                let sim = dense_cosine(&embeddings[i], &centroid);
                if sim > best.1 {
                    best = (pos, sim);
                }
            }
            let i = remaining.remove(best.0);
            picked.push(i);
            for (acc, x) in centroid.iter_mut().zip(&embeddings[i]) {
                *acc += x;
            }
        }
        let expected: Vec<String> = picked.iter().map(|i| format!("r{i}")).collect();
        assert_eq!(build.windows[0].record_ids, expected);
    }

    #[test]
    fn full_diversity_weight_rotates_categories() {
        let categories = [
            SourceCategory::Log,
            SourceCategory::Log,
            SourceCategory::Code,
            SourceCategory::Code,
            SourceCategory::Product,
            SourceCategory::Product,
        ];
        let records: Vec<CorpusRecord> = categories
            .iter()
            .enumerate()
            .map(|(i, &c)| record(&format!("r{i}"), 5, c, vec![1.0, 0.0]))
            .collect();
        let build =
            build_context_windows(&records, &[0.0; 6], 10_000, 1.0, 0, &counter()).unwrap();
        let order = &build.windows[0].record_ids;
        let category_of = |id: &String| {
            let idx: usize = id[1..].parse().unwrap();
            categories[idx].as_str()
        };
        // While any category is missing from the window, consecutive picks
        // never repeat a category.
        let mut seen: Vec<&str> = vec![category_of(&order[0])];
        for pair in order.windows(2) {
            if seen.len() < 3 {
                assert_ne!(
                    category_of(&pair[0]),
                    category_of(&pair[1]),
                    "repeated category while one was still unpicked: {order:?}"
                );
            }
            let cat = category_of(&pair[1]);
            if !seen.contains(&cat) {
                seen.push(cat);
            }
        }
    }

    #[test]
    fn oversize_record_is_skipped_and_reported() {
        let records = vec![
            record("small", 10, SourceCategory::Log, vec![1.0]),
            record("huge", 500, SourceCategory::Log, vec![1.0]),
            record("small2", 10, SourceCategory::Log, vec![1.0]),
        ];
        let build =
            build_context_windows(&records, &[0.0; 3], 100, 0.5, 0, &counter()).unwrap();
        assert_eq!(build.skipped, ["huge".to_owned()]);
        let packed: usize = build.windows.iter().map(|w| w.record_ids.len()).sum();
        assert_eq!(packed, 2);
    }

    #[test]
    fn windows_partition_the_nonskipped_records() {
        let records: Vec<CorpusRecord> = (0..20)
            .map(|i| {
                record(
                    &format!("r{i:02}"),
                    30,
                    if i % 2 == 0 { SourceCategory::Log } else { SourceCategory::Code },
                    vec![(i as f64 * 0.4).cos(), (i as f64 * 0.4).sin()],
                )
            })
            .collect();
        let build =
            build_context_windows(&records, &vec![0.0; 20], 100, 0.3, 0, &counter()).unwrap();
        let mut emitted: Vec<String> = build
            .windows
            .iter()
            .flat_map(|w| w.record_ids.iter().cloned())
            .collect();
        assert_eq!(emitted.len(), 20);
        emitted.sort();
        emitted.dedup();
        assert_eq!(emitted.len(), 20, "a record appeared in two windows");
        for window in &build.windows {
            assert!(window.total_tokens <= window.token_budget);
        }
    }

    #[test]
    fn budget_forces_multiple_windows() {
        let records: Vec<CorpusRecord> = (0..6)
            .map(|i| record(&format!("r{i}"), 50, SourceCategory::Log, vec![1.0]))
            .collect();
        // Each record is 65 tokens, so at most two fit a 150-token budget.
        let build =
            build_context_windows(&records, &[0.0; 6], 150, 0.0, 0, &counter()).unwrap();
        assert_eq!(build.windows.len(), 3);
        for window in &build.windows {
            assert_eq!(window.record_ids.len(), 2);
        }
    }
}
