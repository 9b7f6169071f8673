//! Exact document-level deduplication.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::record::CorpusRecord;

/// One record dropped for being byte-identical to an earlier one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactDrop {
    /// Id of the dropped record.
    pub id: String,
    /// Id of the first record carrying the same text.
    pub duplicate_of: String,
}

/// Keeps the first occurrence of each distinct text, in stream order.
///
/// Later records whose text is byte-identical to an earlier one are dropped
/// with a pointer to the keeper. Keying is by the full text, so there are no
/// hash-collision false positives.
pub fn exact_dedup(
    records: impl IntoIterator<Item = CorpusRecord>,
) -> (Vec<CorpusRecord>, Vec<ExactDrop>) {
    let mut keeper_by_text: HashMap<String, String> = HashMap::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for record in records {
        match keeper_by_text.get(&record.text) {
            Some(keeper) => dropped.push(ExactDrop {
                id: record.id.clone(),
                duplicate_of: keeper.clone(),
            }),
            None => {
                keeper_by_text.insert(record.text.clone(), record.id.clone());
                kept.push(record);
            }
        }
    }
    (kept, dropped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::SourceCategory;

    fn record(id: &str, text: &str) -> CorpusRecord {
        CorpusRecord::new(id, text, SourceCategory::OpenExternal)
    }

    #[test]
    fn first_occurrence_wins() {
        let (kept, dropped) =
            exact_dedup([record("A", "x"), record("B", "x"), record("C", "y")]);
        let kept_ids: Vec<&str> = kept.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(kept_ids, ["A", "C"]);
        assert_eq!(
            dropped,
            vec![ExactDrop {
                id: "B".into(),
                duplicate_of: "A".into()
            }]
        );
    }

    #[test]
    fn distinct_corpus_drops_nothing() {
        let records: Vec<_> = (0..20)
            .map(|i| record(&format!("r{i}"), &format!("text number {i}")))
            .collect();
        let (kept, dropped) = exact_dedup(records.clone());
        assert_eq!(kept, records);
        assert!(dropped.is_empty());
    }

    #[test]
    fn planted_duplicates_are_counted_exactly() {
        let mut records: Vec<_> = (0..100)
            .map(|i| record(&format!("r{i:03}"), &format!("document body {i}")))
            .collect();
        for i in 0..10 {
            records.push(record(&format!("dup{i}"), &format!("document body {i}")));
        }
        let (kept, dropped) = exact_dedup(records);
        assert_eq!(kept.len(), 100);
        assert_eq!(dropped.len(), 10);
        for (i, drop) in dropped.iter().enumerate() {
            assert_eq!(drop.duplicate_of, format!("r{i:03}"));
        }
    }

    #[test]
    fn rerunning_on_output_changes_nothing() {
        let records = vec![
            record("A", "x"),
            record("B", "x"),
            record("C", "y"),
            record("D", "y"),
        ];
        let (once, _) = exact_dedup(records);
        let (twice, dropped) = exact_dedup(once.clone());
        assert_eq!(once, twice);
        assert!(dropped.is_empty());
    }
}
