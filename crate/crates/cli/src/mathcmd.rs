//! The file-driven math subcommands: schedule tables, reward scoring,
//! policy-gradient diagnostics, and distillation divergences.
//!
//! Each function reads plain JSONL or flag values and returns the full
//! output as a string, so the command layer only decides where the bytes
//! go and tests can call these directly.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sectrain_core::distill::{abkd_divergence, topk_mask, AbkdParams, CategoricalDist};
use sectrain_core::rewards::{
    score_ate_text, score_rcm_text, score_vsp_text, CvssVector, CweId, RewardOutcome,
    TechniqueSet,
};
use sectrain_core::rlmath::{difficulty_mask, grpo_loss, DifficultyVerdict, GrpoConfig, GrpoGroup, GrpoLoss};
use sectrain_core::schedule::{
    agentic_mix_weight, LengthSchedule, LengthStage, MixingSchedule,
};

use crate::error::CliError;

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Read {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| (i + 1, line.to_owned()))
        .collect())
}

fn parse_line<T: serde::de::DeserializeOwned>(
    path: &Path,
    line_number: usize,
    line: &str,
) -> Result<T, CliError> {
    serde_json::from_str(line).map_err(|e| CliError::MalformedLine {
        path: path.to_path_buf(),
        line: line_number,
        message: e.to_string(),
    })
}

/// Inputs for `schedule plan`.
#[derive(Debug, Clone)]
pub struct SchedulePlanArgs {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub t_mid: u64,
    pub tau_warm: f64,
    /// Row spacing; defaults to roughly a hundred rows over the horizon.
    pub step: Option<u64>,
    /// Length curriculum as `until:cap` pairs, for example
    /// `1000:4096,5000:16384`. Defaults to a single 4096-token stage.
    pub length_stages: Option<String>,
}

fn parse_length_stages(spec: &str) -> Result<Vec<LengthStage>, CliError> {
    let mut stages = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let Some((until, cap)) = part.split_once(':') else {
            return Err(CliError::InvalidArgument {
                argument: "length-stages",
                message: format!("expected until:cap, got {part}"),
            });
        };
        let parse = |s: &str| {
            u64::from_str(s.trim()).map_err(|e| CliError::InvalidArgument {
                argument: "length-stages",
                message: format!("{s} is not a step count: {e}"),
            })
        };
        stages.push(LengthStage {
            until_step: parse(until)?,
            max_tokens: parse(cap)?,
        });
    }
    Ok(stages)
}

/// Emits the training schedule as CSV rows of `t,alpha,max_tokens`.
///
/// Rows run from step 0 to the sigmoid horizon inclusive. Token caps past
/// the final length stage hold at that stage's cap.
pub fn schedule_plan_csv(args: &SchedulePlanArgs) -> Result<String, CliError> {
    let invalid = |message: String| CliError::InvalidArgument {
        argument: "schedule",
        message,
    };
    let mix = MixingSchedule::new(args.alpha_min, args.alpha_max, args.t_mid, args.tau_warm)
        .map_err(|e| invalid(e.to_string()))?;
    let stages = match &args.length_stages {
        Some(spec) => parse_length_stages(spec)?,
        None => vec![LengthStage {
            until_step: args.t_mid.max(1),
            max_tokens: 4096,
        }],
    };
    let lengths = LengthSchedule::new(stages).map_err(|e| invalid(e.to_string()))?;

    let step = args.step.unwrap_or_else(|| (args.t_mid / 100).max(1));
    if step == 0 {
        return Err(CliError::InvalidArgument {
            argument: "step",
            message: "step must be positive".to_owned(),
        });
    }

    let mut csv = String::from("t,alpha,max_tokens\n");
    let mut t = 0u64;
    loop {
        let alpha = agentic_mix_weight(t, &mix).map_err(|e| invalid(e.to_string()))?;
        let cap = if t > lengths.last_step() {
            lengths
                .stages()
                .last()
                .expect("schedule has at least one stage")
                .max_tokens
        } else {
            lengths.max_tokens_at(t).map_err(|e| invalid(e.to_string()))?
        };
        writeln!(csv, "{t},{alpha},{cap}").expect("string write");
        if t == args.t_mid {
            break;
        }
        t = (t + step).min(args.t_mid);
    }
    Ok(csv)
}

/// Which reward task to score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardTask {
    Rcm,
    Vsp,
    Ate,
}

impl FromStr for RewardTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rcm" => Ok(RewardTask::Rcm),
            "vsp" => Ok(RewardTask::Vsp),
            "ate" => Ok(RewardTask::Ate),
            other => Err(format!("unknown task {other}; expected rcm, vsp, or ate")),
        }
    }
}

/// One prediction line: free text plus an optional severity score.
#[derive(Debug, Deserialize)]
struct PredLine {
    id: String,
    text: String,
    #[serde(default)]
    score: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RcmGoldLine {
    id: String,
    cwe: String,
}

#[derive(Debug, Deserialize)]
struct VspGoldLine {
    id: String,
    vector: String,
    #[serde(default)]
    score: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct AteGoldLine {
    id: String,
    techniques: Vec<String>,
}

/// Scores a prediction file against a gold file and returns one reward
/// outcome JSON object per prediction line, in prediction order.
pub fn reward_score(
    task: RewardTask,
    pred_path: &Path,
    gold_path: &Path,
    gamma: f64,
) -> Result<String, CliError> {
    let preds: Vec<(usize, PredLine)> = read_lines(pred_path)?
        .into_iter()
        .map(|(n, line)| Ok((n, parse_line(pred_path, n, &line)?)))
        .collect::<Result<_, CliError>>()?;

    let mut output = String::new();
    let mut emit = |outcome: &RewardOutcome| {
        output.push_str(&serde_json::to_string(outcome).expect("outcome serializes"));
        output.push('\n');
    };

    match task {
        RewardTask::Rcm => {
            let mut gold = std::collections::HashMap::new();
            for (n, line) in read_lines(gold_path)? {
                let parsed: RcmGoldLine = parse_line(gold_path, n, &line)?;
                let cwe = CweId::parse(&parsed.cwe).map_err(|e| CliError::MalformedLine {
                    path: gold_path.to_path_buf(),
                    line: n,
                    message: e.to_string(),
                })?;
                gold.insert(parsed.id, cwe);
            }
            for (_, pred) in &preds {
                let gold_cwe = gold
                    .get(&pred.id)
                    .ok_or_else(|| CliError::MissingGold(pred.id.clone()))?;
                emit(&score_rcm_text(&pred.id, &pred.text, gold_cwe));
            }
        }
        RewardTask::Vsp => {
            let mut gold = std::collections::HashMap::new();
            for (n, line) in read_lines(gold_path)? {
                let parsed: VspGoldLine = parse_line(gold_path, n, &line)?;
                let bad = |message: String| CliError::MalformedLine {
                    path: gold_path.to_path_buf(),
                    line: n,
                    message,
                };
                let mut vector =
                    CvssVector::parse(&parsed.vector).map_err(|e| bad(e.to_string()))?;
                if let Some(score) = parsed.score {
                    vector = vector.with_score(score).map_err(|e| bad(e.to_string()))?;
                }
                gold.insert(parsed.id, vector);
            }
            for (_, pred) in &preds {
                let gold_vector = gold
                    .get(&pred.id)
                    .ok_or_else(|| CliError::MissingGold(pred.id.clone()))?;
                let outcome = score_vsp_text(&pred.id, &pred.text, pred.score, gold_vector, gamma)
                    .map_err(|e| CliError::InvalidArgument {
                        argument: "gamma",
                        message: e.to_string(),
                    })?;
                emit(&outcome);
            }
        }
        RewardTask::Ate => {
            let mut gold = std::collections::HashMap::new();
            for (n, line) in read_lines(gold_path)? {
                let parsed: AteGoldLine = parse_line(gold_path, n, &line)?;
                let set = TechniqueSet::parse_strict(&parsed.techniques).map_err(|e| {
                    CliError::MalformedLine {
                        path: gold_path.to_path_buf(),
                        line: n,
                        message: e.to_string(),
                    }
                })?;
                gold.insert(parsed.id, set);
            }
            for (_, pred) in &preds {
                let gold_set = gold
                    .get(&pred.id)
                    .ok_or_else(|| CliError::MissingGold(pred.id.clone()))?;
                emit(&score_ate_text(&pred.id, &pred.text, gold_set));
            }
        }
    }
    Ok(output)
}

/// One output line of `rlmath grpo`: the loss diagnostics plus the
/// difficulty verdict for the group's pass rate.
#[derive(Debug, Serialize)]
struct GrpoLine {
    group: usize,
    #[serde(flatten)]
    loss: GrpoLoss,
    pass_count: usize,
    group_size: usize,
    difficulty: DifficultyVerdict,
}

/// Reward value above which a rollout counts as a pass for difficulty
/// banding.
pub const PASS_THRESHOLD: f64 = 0.5;

/// Scores every rollout group in a JSONL file: normalized advantages,
/// clip and divergence diagnostics, the scalar loss, and the difficulty
/// verdict.
pub fn rlmath_grpo(group_path: &Path, config: &GrpoConfig) -> Result<String, CliError> {
    let mut output = String::new();
    for (index, (n, line)) in read_lines(group_path)?.into_iter().enumerate() {
        let group: GrpoGroup = parse_line(group_path, n, &line)?;
        let bad = |message: String| CliError::MalformedLine {
            path: group_path.to_path_buf(),
            line: n,
            message,
        };
        let loss = grpo_loss(&group, config).map_err(|e| bad(e.to_string()))?;
        let pass_count = group
            .rewards
            .iter()
            .filter(|&&r| r > PASS_THRESHOLD)
            .count();
        let difficulty = difficulty_mask(pass_count, group.rewards.len(), config)
            .map_err(|e| bad(e.to_string()))?;
        let line = GrpoLine {
            group: index,
            loss,
            pass_count,
            group_size: group.rewards.len(),
            difficulty,
        };
        output.push_str(&serde_json::to_string(&line).expect("line serializes"));
        output.push('\n');
    }
    Ok(output)
}

/// One teacher/student pair in the distillation input file.
#[derive(Debug, Deserialize)]
struct PairLine {
    teacher: Vec<f64>,
    student: Vec<f64>,
}

/// One output line of `distill abkd`.
#[derive(Debug, Serialize)]
struct AbkdLine {
    pair: usize,
    divergence: f64,
    support_size: usize,
}

/// Computes the alpha-beta divergence for every teacher/student pair in a
/// JSONL file, optionally restricted to the teacher's top-k support.
pub fn distill_abkd(
    pairs_path: &Path,
    alpha: f64,
    beta: f64,
    topk: Option<usize>,
) -> Result<String, CliError> {
    let params = AbkdParams::new(alpha, beta).map_err(|e| CliError::InvalidArgument {
        argument: "alpha/beta",
        message: e.to_string(),
    })?;
    let mut output = String::new();
    for (index, (n, line)) in read_lines(pairs_path)?.into_iter().enumerate() {
        let pair: PairLine = parse_line(pairs_path, n, &line)?;
        let bad = |message: String| CliError::MalformedLine {
            path: pairs_path.to_path_buf(),
            line: n,
            message,
        };
        let teacher = CategoricalDist::new(pair.teacher).map_err(|e| bad(e.to_string()))?;
        let student = CategoricalDist::new(pair.student).map_err(|e| bad(e.to_string()))?;
        let (teacher, student) = match topk {
            Some(k) => {
                let projection = topk_mask(&teacher, k).map_err(|e| bad(e.to_string()))?;
                let projected_student = projection
                    .project_student(&student)
                    .map_err(|e| bad(e.to_string()))?;
                (projection.teacher().clone(), projected_student)
            }
            None => (teacher, student),
        };
        let divergence = abkd_divergence(&teacher, &student, &params).map_err(|e| bad(e.to_string()))?;
        let line = AbkdLine {
            pair: index,
            divergence,
            support_size: teacher.len(),
        };
        output.push_str(&serde_json::to_string(&line).expect("line serializes"));
        output.push('\n');
    }
    Ok(output)
}
