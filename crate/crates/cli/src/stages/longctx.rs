//! Longctx: long-context synthesis over the whole batch.
//!
//! Entropy mode finds high-entropy anchor tokens in each document,
//! verifies retrieved candidate passages by measuring how much each one
//! lowers anchor entropy, and rebuilds documents that gained at least one
//! verified dependency. Every candidate test is logged to the audit
//! artifact whether or not it passed. Nextlong mode interleaves retrieved
//! distractor passages into each document toward a target token length.
//! Both modes replace documents in place: record count and ids are
//! unchanged.

use serde::Serialize;

use sectrain_core::longctx::{
    find_entropy_anchors, interleave_hard_negatives, synthesize_long_doc, verify_candidates,
    AdaptiveTrigramOracle, CandidateAudit, CandidateRetriever, EmbeddingRetriever,
    LongCtxError,
};
use sectrain_core::ngram::ByteTrigramModel;
use sectrain_core::record::CorpusRecord;
use sectrain_core::tokens::InflatedWhitespaceCounter;

use crate::config::{LongctxMode, LongctxParams};

use super::{json_line, Artifact, StageOutput};

/// One audit line: a candidate test for one record and anchor.
#[derive(Debug, Clone, Serialize)]
struct AuditLine<'a> {
    record_id: &'a str,
    #[serde(flatten)]
    audit: &'a CandidateAudit,
}

pub fn run(
    records: Vec<CorpusRecord>,
    params: &LongctxParams,
    seed: u64,
) -> Result<StageOutput, String> {
    match params.mode {
        LongctxMode::Entropy => run_entropy(records, params, seed),
        LongctxMode::Nextlong => run_nextlong(records, params),
    }
}

fn run_entropy(
    records: Vec<CorpusRecord>,
    params: &LongctxParams,
    seed: u64,
) -> Result<StageOutput, String> {
    let base = ByteTrigramModel::fit(records.iter().map(|r| r.text.as_str()));
    let oracle = AdaptiveTrigramOracle::with_base(base);
    let retriever = EmbeddingRetriever::new(&records);

    let mut out = StageOutput::default();
    let mut audit_lines = Vec::new();
    for record in records {
        let anchors = match find_entropy_anchors(&record.text, &oracle, params.anchor_sigma) {
            Ok(anchors) => anchors,
            Err(LongCtxError::EmptyDocument) => Vec::new(),
            Err(e) => return Err(format!("record {}: {e}", record.id)),
        };
        let candidates = retriever.retrieve(&record, params.top_k);
        let mut verified = Vec::new();
        for anchor in anchors.iter().take(params.max_anchors) {
            if candidates.is_empty() {
                break;
            }
            let outcome = verify_candidates(
                &record.text,
                anchor,
                &candidates,
                &oracle,
                params.min_reduction,
            );
            for audit in &outcome.audit {
                audit_lines.push(json_line(&AuditLine {
                    record_id: &record.id,
                    audit,
                }));
            }
            verified.extend(outcome.verified);
        }
        if verified.is_empty() {
            out.records.push(record);
        } else {
            let synthesized =
                synthesize_long_doc(&record, &verified, &candidates, params.placement, seed)
                    .map_err(|e| format!("record {}: {e}", record.id))?;
            out.records.push(synthesized);
        }
    }
    out.artifacts.push(Artifact {
        label: "audit",
        lines: audit_lines,
    });
    Ok(out)
}

fn run_nextlong(
    records: Vec<CorpusRecord>,
    params: &LongctxParams,
) -> Result<StageOutput, String> {
    let retriever = EmbeddingRetriever::new(&records);
    let counter = InflatedWhitespaceCounter {
        factor: params.token_factor,
    };

    let mut out = StageOutput::default();
    for record in records {
        let distractors = retriever.retrieve(&record, params.top_k);
        if distractors.is_empty() {
            out.records.push(record);
            continue;
        }
        match interleave_hard_negatives(&record, &distractors, params.target_length, &counter) {
            Ok((interleaved, _inserted)) => out.records.push(interleaved),
            Err(LongCtxError::TargetTooSmall { .. }) | Err(LongCtxError::EmptyDocument) => {
                out.records.push(record);
            }
            Err(e) => return Err(format!("record {}: {e}", record.id)),
        }
    }
    Ok(out)
}
