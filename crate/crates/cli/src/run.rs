//! Executes a plan stage by stage.
//!
//! Stages run sequentially. Each one reads its input, runs, and writes
//! its records file, side artifacts, and manifest before the next stage
//! starts; every write goes to a temporary file first and is renamed into
//! place, so a failing stage halts the run with all earlier outputs
//! intact and no partial files. Apart from the wall-clock fields of the
//! run report, a rerun of the same plan writes byte-identical files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use sectrain_core::record::{read_all, RunManifest};

use crate::error::CliError;
use crate::plan::{ExecutionPlan, InputSource, StagePlan};
use crate::stages;

/// Per-stage entry in the run report.
#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub name: String,
    pub kind: String,
    pub input_count: u64,
    pub output_count: u64,
    pub drops: std::collections::BTreeMap<String, u64>,
    pub output: String,
    pub artifacts: Vec<String>,
    pub wall_ms: u64,
}

/// Summary of a full pipeline run, written as `run_report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub seed_digest: String,
    pub out_dir: String,
    pub stages: Vec<StageReport>,
    pub wall_ms: u64,
}

/// Writes `content` to `path` atomically: a temporary sibling is written
/// first and renamed over the target.
pub fn write_atomic(path: &Path, content: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    let fail = |message: String| CliError::Write {
        path: path.to_path_buf(),
        message,
    };
    std::fs::write(&tmp, content).map_err(|e| fail(e.to_string()))?;
    std::fs::rename(&tmp, path).map_err(|e| fail(e.to_string()))
}

fn records_jsonl(records: &[sectrain_core::record::CorpusRecord]) -> String {
    let mut buffer = String::new();
    for record in records {
        buffer.push_str(&serde_json::to_string(record).expect("record serializes"));
        buffer.push('\n');
    }
    buffer
}

fn jsonl(lines: &[String]) -> String {
    let mut buffer = String::new();
    for line in lines {
        buffer.push_str(line);
        buffer.push('\n');
    }
    buffer
}

fn stage_input_path(plan: &ExecutionPlan, stage: &StagePlan) -> PathBuf {
    match &stage.input {
        InputSource::File(path) => path.clone(),
        InputSource::Stage { index, .. } => plan.stages[*index].output.clone(),
    }
}

/// Runs every stage of `plan` and writes the run report.
pub fn run_plan(plan: &ExecutionPlan) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(&plan.out_dir).map_err(|e| CliError::Write {
        path: plan.out_dir.clone(),
        message: e.to_string(),
    })?;

    let run_started = Instant::now();
    let mut reports = Vec::with_capacity(plan.stages.len());
    for stage in &plan.stages {
        let started = Instant::now();
        let input_path = stage_input_path(plan, stage);
        let records = read_all(&input_path).map_err(|e| CliError::Stage {
            stage: stage.name.clone(),
            message: format!("reading {}: {e}", input_path.display()),
        })?;
        let input_count = records.len() as u64;

        let output = stages::execute(&stage.name, &stage.params, records, plan.seed)?;

        write_atomic(&stage.output, &records_jsonl(&output.records))?;
        let mut artifact_paths = Vec::new();
        for artifact in &output.artifacts {
            let path = plan
                .out_dir
                .join(format!("{}.{}.jsonl", stage.file_stem(), artifact.label));
            write_atomic(&path, &jsonl(&artifact.lines))?;
            artifact_paths.push(path.display().to_string());
        }

        let manifest = RunManifest {
            stage: stage.name.clone(),
            input_count,
            output_count: output.records.len() as u64,
            drops: output.drops.clone(),
            seed: plan.seed,
            config_digest: stage.params_digest.clone(),
        };
        manifest.validate().map_err(|e| CliError::Stage {
            stage: stage.name.clone(),
            message: e.to_string(),
        })?;
        let manifest_path = plan
            .out_dir
            .join(format!("{}.manifest.json", stage.file_stem()));
        let manifest_json =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&manifest_path, &manifest_json)?;

        reports.push(StageReport {
            name: stage.name.clone(),
            kind: stage.kind.as_str().to_owned(),
            input_count,
            output_count: manifest.output_count,
            drops: manifest.drops,
            output: stage.output.display().to_string(),
            artifacts: artifact_paths,
            wall_ms: started.elapsed().as_millis() as u64,
        });
    }

    let report = RunReport {
        seed: plan.seed,
        seed_digest: plan.seed_digest.clone(),
        out_dir: plan.out_dir.display().to_string(),
        stages: reports,
        wall_ms: run_started.elapsed().as_millis() as u64,
    };
    let report_json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_atomic(&plan.out_dir.join("run_report.json"), &report_json)?;
    Ok(report)
}
