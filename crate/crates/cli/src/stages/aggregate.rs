//! Aggregate: hierarchical clustering and token-budgeted window packing.
//!
//! Every record needs an embedding; a record without one is a wiring
//! mistake upstream and fails the stage by id. Informativeness defaults
//! to each record's token count and a scores file can override it per
//! record. The stage emits two artifacts: the packed training sequences
//! (members reordered most-informative-first) and the per-record cluster
//! paths.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use sectrain_core::aggregate::{
    build_context_windows, cluster_hierarchical, reorder_by_informativeness,
    ClusterAssignment,
};
use sectrain_core::record::CorpusRecord;
use sectrain_core::tokens::{InflatedWhitespaceCounter, TokenCounter};

use crate::config::AggregateParams;

use super::{json_line, Artifact, StageOutput};

/// One line of the informativeness overrides file.
#[derive(Debug, Deserialize)]
struct ScoreLine {
    id: String,
    score: f64,
}

fn load_scores(path: &Path) -> Result<HashMap<String, f64>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read scores file {}: {e}", path.display()))?;
    let mut scores = HashMap::new();
    for (number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ScoreLine = serde_json::from_str(line)
            .map_err(|e| format!("{} line {}: {e}", path.display(), number + 1))?;
        scores.insert(parsed.id, parsed.score);
    }
    Ok(scores)
}

pub fn run(
    records: Vec<CorpusRecord>,
    params: &AggregateParams,
    scores_path: Option<&Path>,
    seed: u64,
) -> Result<StageOutput, String> {
    if records.is_empty() {
        let mut out = StageOutput::default();
        out.artifacts.push(Artifact {
            label: "sequences",
            lines: Vec::new(),
        });
        out.artifacts.push(Artifact {
            label: "clusters",
            lines: Vec::new(),
        });
        return Ok(out);
    }

    for record in &records {
        if record.embedding.is_none() {
            return Err(format!("record {} has no embedding", record.id));
        }
    }

    let overrides = match scores_path {
        Some(path) => load_scores(path)?,
        None => HashMap::new(),
    };
    let counter = InflatedWhitespaceCounter {
        factor: params.token_factor,
    };
    let informativeness: Vec<f64> = records
        .iter()
        .map(|r| {
            overrides
                .get(&r.id)
                .copied()
                .unwrap_or_else(|| counter.count(&r.text) as f64)
        })
        .collect();

    let ids: Vec<String> = records.iter().map(|r| r.id.clone()).collect();
    let embeddings: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.embedding.clone().expect("checked above"))
        .collect();
    let tree = cluster_hierarchical(&ids, &embeddings, params.levels, params.branching, seed)
        .map_err(|e| e.to_string())?;
    let cluster_lines: Vec<String> = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            json_line(&ClusterAssignment {
                id: id.clone(),
                path: tree.path(i),
            })
        })
        .collect();

    let build = build_context_windows(
        &records,
        &informativeness,
        params.budget,
        params.diversity_weight,
        seed,
        &counter,
    )
    .map_err(|e| e.to_string())?;

    let mut sequence_lines = Vec::with_capacity(build.windows.len());
    let mut ordered_ids = Vec::new();
    for window in &build.windows {
        let reordered =
            reorder_by_informativeness(window, &window.scores).map_err(|e| e.to_string())?;
        ordered_ids.extend(reordered.record_ids.iter().cloned());
        sequence_lines.push(json_line(&reordered));
    }

    let by_id: HashMap<String, CorpusRecord> =
        records.into_iter().map(|r| (r.id.clone(), r)).collect();
    let mut out = StageOutput::default();
    for id in ordered_ids {
        out.records
            .push(by_id.get(&id).expect("window members come from input").clone());
    }
    if !build.skipped.is_empty() {
        out.drops
            .insert("oversize".to_owned(), build.skipped.len() as u64);
    }
    out.artifacts.push(Artifact {
        label: "sequences",
        lines: sequence_lines,
    });
    out.artifacts.push(Artifact {
        label: "clusters",
        lines: cluster_lines,
    });
    Ok(out)
}
