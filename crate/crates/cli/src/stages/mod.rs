//! Stage implementations shared by the pipeline runner and the standalone
//! stage subcommands.
//!
//! Each stage is a pure function from a record batch (plus parameters and
//! the run seed) to a [`StageOutput`]: the surviving records, a
//! drop-reason histogram, and any side artifacts. All file handling lives
//! in the callers, so a stage behaves identically whether it runs inside
//! a pipeline or from a single subcommand.

mod aggregate;
mod dedup;
mod ingest;
mod longctx;
mod quality;

use std::collections::BTreeMap;

use sectrain_core::record::CorpusRecord;

use crate::config::StageParams;
use crate::error::CliError;

/// A side file a stage produces next to its records output.
#[derive(Debug, Clone)]
pub struct Artifact {
    /// Suffix in the artifact file name: drops, sequences, clusters, or
    /// audit.
    pub label: &'static str,
    /// One JSON object per line.
    pub lines: Vec<String>,
}

/// Result of running one stage over a record batch.
#[derive(Debug, Clone, Default)]
pub struct StageOutput {
    /// Surviving records, in output order.
    pub records: Vec<CorpusRecord>,
    /// Drop counts by reason; only nonzero reasons appear.
    pub drops: BTreeMap<String, u64>,
    /// Side artifacts, if the stage produces any.
    pub artifacts: Vec<Artifact>,
}

/// Runs the stage selected by `params` over `records`.
///
/// Errors are reported against `stage_name` so pipeline failures say which
/// stage broke.
pub fn execute(
    stage_name: &str,
    params: &StageParams,
    records: Vec<CorpusRecord>,
    seed: u64,
) -> Result<StageOutput, CliError> {
    let result = match params {
        StageParams::Ingest(p) => Ok(ingest::run(records, p)),
        StageParams::Dedup(p) => dedup::run(records, p, seed),
        StageParams::Quality {
            params,
            scores_path,
            scrub_rules_path,
        } => quality::run(
            records,
            params,
            scores_path.as_deref(),
            scrub_rules_path.as_deref(),
        ),
        StageParams::Aggregate {
            params,
            scores_path,
        } => aggregate::run(records, params, scores_path.as_deref(), seed),
        StageParams::Longctx(p) => longctx::run(records, p, seed),
    };
    result.map_err(|message| CliError::Stage {
        stage: stage_name.to_owned(),
        message,
    })
}

/// Serializes one value as a JSONL line.
fn json_line<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("artifact line serializes")
}
