//! Ingest: text normalization and empty-record removal.

use sectrain_core::record::{normalize_text, CorpusRecord};

use crate::config::IngestParams;

use super::StageOutput;

/// Normalizes line endings and blank runs in every record and drops
/// records whose text is empty afterwards.
pub fn run(records: Vec<CorpusRecord>, _params: &IngestParams) -> StageOutput {
    let mut out = StageOutput::default();
    for mut record in records {
        record.text = normalize_text(&record.text);
        if record.text.trim().is_empty() {
            *out.drops.entry("empty_text".to_owned()).or_insert(0) += 1;
        } else {
            out.records.push(record);
        }
    }
    out
}
