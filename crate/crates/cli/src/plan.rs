//! Turns a parsed config into an execution plan.
//!
//! Planning is where wiring mistakes surface: unknown parameter keys,
//! duplicate or forward stage references, and input files that do not
//! exist all fail here, before anything runs. The plan also fixes every
//! output path and parameter digest, so two runs of the same plan write
//! the same files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use sectrain_core::stable_digest;

use crate::config::{typed_params, PipelineConfig, StageKind, StageParams};
use crate::error::CliError;

/// Where a stage reads its records from.
#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Output of an earlier stage in the same plan.
    Stage { index: usize, name: String },
    /// A file on disk, resolved relative to the config.
    File(PathBuf),
}

/// One stage, fully resolved.
#[derive(Debug, Clone)]
pub struct StagePlan {
    /// Position in execution order, from zero.
    pub index: usize,
    /// Unique stage name.
    pub name: String,
    /// Stage implementation.
    pub kind: StageKind,
    /// Where the records come from.
    pub input: InputSource,
    /// Records file this stage writes.
    pub output: PathBuf,
    /// Typed parameters.
    pub params: StageParams,
    /// Digest of the parameters as configured; the seed is not part of it.
    pub params_digest: String,
}

impl StagePlan {
    /// Base name shared by this stage's records file, manifest, and
    /// artifact files.
    pub fn file_stem(&self) -> String {
        format!("{:02}_{}", self.index + 1, self.name)
    }
}

/// A resolved, runnable pipeline.
#[derive(Debug, Clone)]
pub struct ExecutionPlan {
    /// Seed every stage runs under.
    pub seed: u64,
    /// Digest of the seed alone; the only part of the plan the seed
    /// changes.
    pub seed_digest: String,
    /// Directory the run writes into.
    pub out_dir: PathBuf,
    /// Stages in execution order.
    pub stages: Vec<StagePlan>,
}

/// Serializable view of a plan, printed by `pipeline plan`.
#[derive(Debug, Clone, Serialize)]
pub struct PlanView {
    pub seed: u64,
    pub seed_digest: String,
    pub out_dir: String,
    pub stages: Vec<StageView>,
}

/// Serializable view of one planned stage.
#[derive(Debug, Clone, Serialize)]
pub struct StageView {
    pub index: usize,
    pub name: String,
    pub kind: StageKind,
    pub input: String,
    pub output: String,
    pub params_digest: String,
}

impl ExecutionPlan {
    /// View used for display and plan comparison.
    pub fn view(&self) -> PlanView {
        PlanView {
            seed: self.seed,
            seed_digest: self.seed_digest.clone(),
            out_dir: self.out_dir.display().to_string(),
            stages: self
                .stages
                .iter()
                .map(|s| StageView {
                    index: s.index,
                    name: s.name.clone(),
                    kind: s.kind,
                    input: match &s.input {
                        InputSource::Stage { name, .. } => format!("stage:{name}"),
                        InputSource::File(p) => p.display().to_string(),
                    },
                    output: s.output.display().to_string(),
                    params_digest: s.params_digest.clone(),
                })
                .collect(),
        }
    }
}

/// Overrides the command line can apply on top of the config.
#[derive(Debug, Clone, Default)]
pub struct PlanOverrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
}

/// Builds an execution plan from a config.
///
/// `config_dir` anchors relative input paths; it is normally the directory
/// containing the config file. Stage inputs naming a stage that does not
/// run earlier are rejected, which also rules out self-references and
/// cycles, and file inputs must exist.
pub fn build_plan(
    config: &PipelineConfig,
    config_dir: &Path,
    overrides: &PlanOverrides,
) -> Result<ExecutionPlan, CliError> {
    let seed = overrides.seed.or(config.seed).unwrap_or(42);
    let out_dir = overrides
        .out_dir
        .clone()
        .or_else(|| config.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out_dir = if out_dir.is_absolute() {
        out_dir
    } else {
        config_dir.join(out_dir)
    };

    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut stages = Vec::with_capacity(config.stages.len());
    for (index, stage) in config.stages.iter().enumerate() {
        let name = stage.name().to_owned();
        if seen.contains_key(&name) {
            return Err(CliError::DuplicateStageName(name));
        }

        let params = typed_params(stage, config_dir)?;
        for (label, path) in aux_paths(&params) {
            if !path.is_file() {
                return Err(CliError::StageParams {
                    stage: name.clone(),
                    message: format!("{label} {} does not exist", path.display()),
                });
            }
        }

        let input = resolve_input(&stage.input, &name, &seen, config, config_dir)?;
        let params_digest = digest_params(&params);
        let mut plan = StagePlan {
            index,
            name: name.clone(),
            kind: stage.kind,
            input,
            output: PathBuf::new(),
            params,
            params_digest,
        };
        plan.output = out_dir.join(format!("{}.jsonl", plan.file_stem()));
        stages.push(plan);
        seen.insert(name, index);
    }

    Ok(ExecutionPlan {
        seed,
        seed_digest: stable_digest(format!("seed:{seed}").as_bytes()),
        out_dir,
        stages,
    })
}

/// Digest of a stage's parameters as configured. The seed is deliberately
/// not part of it: changing only the seed changes only the plan's seed
/// digest.
pub fn digest_params(params: &StageParams) -> String {
    stable_digest(
        format!("{}:{}", params.kind().as_str(), params.canonical_json()).as_bytes(),
    )
}

/// File-valued parameters that must exist at plan time.
fn aux_paths(params: &StageParams) -> Vec<(&'static str, &PathBuf)> {
    let mut paths = Vec::new();
    match params {
        StageParams::Quality {
            scores_path,
            scrub_rules_path,
            ..
        } => {
            if let Some(p) = scores_path {
                paths.push(("scores_file", p));
            }
            if let Some(p) = scrub_rules_path {
                paths.push(("scrub_rules", p));
            }
        }
        StageParams::Aggregate { scores_path, .. } => {
            if let Some(p) = scores_path {
                paths.push(("scores_file", p));
            }
        }
        _ => {}
    }
    paths
}

fn resolve_input(
    input: &str,
    stage_name: &str,
    earlier: &HashMap<String, usize>,
    config: &PipelineConfig,
    config_dir: &Path,
) -> Result<InputSource, CliError> {
    if let Some(&index) = earlier.get(input) {
        return Ok(InputSource::Stage {
            index,
            name: input.to_owned(),
        });
    }
    // A reference to this stage or a later one is an ordering violation,
    // not a missing file.
    if config.stages.iter().any(|s| s.name() == input) {
        return Err(CliError::StageOrderViolation {
            stage: stage_name.to_owned(),
            input: input.to_owned(),
        });
    }
    let path = {
        let candidate = PathBuf::from(input);
        if candidate.is_absolute() {
            candidate
        } else {
            config_dir.join(candidate)
        }
    };
    if !path.is_file() {
        return Err(CliError::DanglingInput {
            stage: stage_name.to_owned(),
            path,
        });
    }
    Ok(InputSource::File(path))
}
