//! Binary entry point: argument parsing and output routing.
//!
//! Every failure path prints one machine-readable JSON object on stderr
//! and exits nonzero; success output goes to `--out` when given, stdout
//! otherwise.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use sectrain_core::longctx::Placement;
use sectrain_core::record::{read_all, RunManifest};
use sectrain_core::rlmath::GrpoConfig;

use sectrain_cli::config::{
    AggregateParams, DedupParams, DedupTier, IngestParams, LongctxMode, LongctxParams,
    PipelineConfig, QualityParams, StageParams,
};
use sectrain_cli::error::CliError;
use sectrain_cli::mathcmd::{self, RewardTask, SchedulePlanArgs};
use sectrain_cli::plan::{build_plan, digest_params, PlanOverrides};
use sectrain_cli::run::{run_plan, write_atomic};
use sectrain_cli::stages;

#[derive(Parser)]
#[command(
    name = "sectrain",
    version,
    about = "Deterministic corpus engineering and post-training math toolkit"
)]
struct Cli {
    /// Seed for seeded operations; overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Pipeline config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output file, or output directory for pipeline runs.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize record text and drop empty records.
    Ingest(IngestArgs),
    /// Remove duplicate records tier by tier.
    Dedup(DedupArgs),
    /// Scrub, filter, and score records.
    Quality(QualityArgs),
    /// Cluster records and pack token-budgeted training sequences.
    Aggregate(AggregateArgs),
    /// Synthesize long-context documents.
    Longctx(LongctxArgs),
    /// Training schedule tables.
    Schedule {
        #[command(subcommand)]
        cmd: ScheduleCmd,
    },
    /// Verifiable reward scoring.
    Reward {
        #[command(subcommand)]
        cmd: RewardCmd,
    },
    /// Policy-optimization math.
    Rlmath {
        #[command(subcommand)]
        cmd: RlmathCmd,
    },
    /// Distillation divergences.
    Distill {
        #[command(subcommand)]
        cmd: DistillCmd,
    },
    /// Multi-stage pipeline planning and execution.
    Pipeline {
        #[command(subcommand)]
        cmd: PipelineCmd,
    },
}

#[derive(Args)]
struct IngestArgs {
    /// Input records file (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
}

#[derive(Args)]
struct DedupArgs {
    /// Input records file (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Tiers to apply in order: exact, minhash, feature.
    #[arg(long, value_delimiter = ',', default_value = "exact,minhash")]
    tiers: Vec<String>,
    /// Shingle width in tokens.
    #[arg(long, default_value_t = 5)]
    shingle_width: usize,
    /// Signature length.
    #[arg(long, default_value_t = 128)]
    num_hashes: usize,
    /// LSH band count.
    #[arg(long, default_value_t = 16)]
    bands: usize,
    /// Rows per LSH band.
    #[arg(long, default_value_t = 8)]
    rows: usize,
    /// Similarity cutoff for confirming near-duplicate pairs.
    #[arg(long, default_value_t = 0.8)]
    jaccard_threshold: f64,
    /// Cosine cutoff for the feature tier.
    #[arg(long, default_value_t = 0.9)]
    tau: f64,
    /// Sparse feature space size.
    #[arg(long, default_value_t = 65_536)]
    k_dim: u32,
    /// Active features kept per record.
    #[arg(long, default_value_t = 64)]
    k_active: usize,
    /// Where to write the drop list; defaults next to the output.
    #[arg(long, value_name = "FILE")]
    drops: Option<PathBuf>,
}

#[derive(Args)]
struct QualityArgs {
    /// Input records file (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Minimum text length in characters.
    #[arg(long, default_value_t = 1)]
    min_len: usize,
    /// Maximum text length in characters.
    #[arg(long, default_value_t = 1_000_000)]
    max_len: usize,
    /// Accepted language labels; omit to accept every language.
    #[arg(long, value_delimiter = ',')]
    languages: Vec<String>,
    /// Per-byte perplexity cutoff against a model fitted on the input.
    #[arg(long)]
    max_perplexity: Option<f64>,
    /// Convex weights for the four judge axes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.25,0.25,0.25,0.25")]
    weights: Vec<f64>,
    /// Composite-score cutoff for records in the scores file.
    #[arg(long)]
    min_q: Option<f64>,
    /// Judge scores file: JSONL with id and a four-element scores array.
    #[arg(long, value_name = "FILE")]
    scores_file: Option<PathBuf>,
    /// Skip scrubbing sensitive spans.
    #[arg(long)]
    no_scrub: bool,
    /// Scrub rule file overriding the built-in thresholds.
    #[arg(long, value_name = "FILE")]
    scrub_rules: Option<PathBuf>,
}

#[derive(Args)]
struct AggregateArgs {
    /// Input records file (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Cluster hierarchy depth.
    #[arg(long, default_value_t = 2)]
    levels: usize,
    /// Split factor per hierarchy level.
    #[arg(long, default_value_t = 4)]
    branching: usize,
    /// Token budget per training sequence.
    #[arg(long, default_value_t = 2048)]
    budget: usize,
    /// Blend between informativeness and category novelty when packing.
    #[arg(long, default_value_t = 0.3)]
    diversity_weight: f64,
    /// Informativeness overrides: JSONL with id and score.
    #[arg(long, value_name = "FILE")]
    scores_file: Option<PathBuf>,
    /// Multiplier the token counter applies to whitespace counts.
    #[arg(long, default_value_t = 1.3)]
    token_factor: f64,
    /// Where to write the training sequences; defaults next to the output.
    #[arg(long, value_name = "FILE")]
    sequences: Option<PathBuf>,
    /// Where to write the cluster paths; defaults next to the output.
    #[arg(long, value_name = "FILE")]
    clusters: Option<PathBuf>,
}

#[derive(Args)]
struct LongctxArgs {
    /// Input records file (JSONL).
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Synthesis mode: entropy or nextlong.
    #[arg(long, default_value = "entropy")]
    mode: String,
    /// Minimum relative entropy reduction for a verified dependency.
    #[arg(long, default_value_t = 0.4)]
    min_reduction: f64,
    /// Anchor threshold in standard deviations above the mean.
    #[arg(long, default_value_t = 1.0)]
    anchor_sigma: f64,
    /// At most this many anchors are verified per document.
    #[arg(long, default_value_t = 3)]
    max_anchors: usize,
    /// Candidates retrieved per document.
    #[arg(long, default_value_t = 4)]
    top_k: usize,
    /// Where verified passages go: prepend or append.
    #[arg(long, default_value = "prepend")]
    placement: String,
    /// Token length nextlong documents grow toward.
    #[arg(long, default_value_t = 1024)]
    target_length: usize,
    /// Multiplier the token counter applies to whitespace counts.
    #[arg(long, default_value_t = 1.3)]
    token_factor: f64,
    /// Where to write the candidate audit; defaults next to the output.
    #[arg(long, value_name = "FILE")]
    audit: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScheduleCmd {
    /// Emit the mixing and length schedule as CSV.
    Plan(SchedulePlanCliArgs),
}

#[derive(Args)]
struct SchedulePlanCliArgs {
    /// Mixing weight at step zero.
    #[arg(long)]
    alpha_min: f64,
    /// Mixing weight the schedule saturates toward.
    #[arg(long)]
    alpha_max: f64,
    /// Horizon midpoint step.
    #[arg(long)]
    t_mid: u64,
    /// Sigmoid temperature in steps.
    #[arg(long)]
    tau_warm: f64,
    /// Row spacing; defaults to roughly a hundred rows.
    #[arg(long)]
    step: Option<u64>,
    /// Length curriculum as until:cap pairs, e.g. 1000:4096,5000:16384.
    #[arg(long)]
    length_stages: Option<String>,
}

#[derive(Subcommand)]
enum RewardCmd {
    /// Score predictions against gold labels.
    Score(RewardScoreArgs),
}

#[derive(Args)]
struct RewardScoreArgs {
    /// Task to score: rcm, vsp, or ate.
    #[arg(long)]
    task: String,
    /// Predictions: JSONL with id, text, and optional score.
    #[arg(long, value_name = "FILE")]
    pred_file: PathBuf,
    /// Gold labels; shape depends on the task.
    #[arg(long, value_name = "FILE")]
    gold_file: PathBuf,
    /// Weight of the severity-score term in the vector task.
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
}

#[derive(Subcommand)]
enum RlmathCmd {
    /// Group-normalized advantages, loss, and difficulty banding.
    Grpo(GrpoArgs),
}

#[derive(Args)]
struct GrpoArgs {
    /// Rollout groups: JSONL with rewards and per-response token data.
    #[arg(long, value_name = "FILE")]
    group_file: PathBuf,
    /// Importance-ratio clip width.
    #[arg(long, default_value_t = 0.2)]
    epsilon: f64,
    /// Divergence penalty coefficient.
    #[arg(long, default_value_t = 0.04)]
    lambda: f64,
    /// Pass rates strictly below this are dropped as too hard.
    #[arg(long, default_value_t = 0.10)]
    p_lo: f64,
    /// Pass rates strictly above this are dropped as too easy.
    #[arg(long, default_value_t = 0.95)]
    p_hi: f64,
}

#[derive(Subcommand)]
enum DistillCmd {
    /// Alpha-beta divergence over teacher/student pairs.
    Abkd(AbkdArgs),
}

#[derive(Args)]
struct AbkdArgs {
    /// Distribution pairs: JSONL with teacher and student arrays.
    #[arg(long, value_name = "FILE")]
    pairs_file: PathBuf,
    /// Alpha parameter; must be nonzero.
    #[arg(long)]
    alpha: f64,
    /// Beta parameter; must be nonzero.
    #[arg(long)]
    beta: f64,
    /// Restrict to the teacher's top-k support before comparing.
    #[arg(long)]
    topk: Option<usize>,
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Resolve and print the execution plan without running it.
    Plan,
    /// Execute every stage of the configured pipeline.
    Run,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("{}", err.to_json());
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or(42);
    match cli.command {
        Command::Ingest(args) => {
            let params = StageParams::Ingest(IngestParams {});
            run_single_stage(&args.input, cli.out.as_deref(), &params, seed, &[])
        }
        Command::Dedup(args) => {
            let tiers = args
                .tiers
                .iter()
                .map(|t| DedupTier::from_str(t))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|message| CliError::InvalidArgument {
                    argument: "tiers",
                    message,
                })?;
            let params = StageParams::Dedup(DedupParams {
                tiers,
                shingle_width: args.shingle_width,
                num_hashes: args.num_hashes,
                bands: args.bands,
                rows: args.rows,
                jaccard_threshold: args.jaccard_threshold,
                tau: args.tau,
                k_dim: args.k_dim,
                k_active: args.k_active,
            });
            let overrides = [("drops", args.drops)];
            run_single_stage(&args.input, cli.out.as_deref(), &params, seed, &overrides)
        }
        Command::Quality(args) => {
            let weights: [f64; 4] = args
                .weights
                .clone()
                .try_into()
                .map_err(|_| CliError::InvalidArgument {
                    argument: "weights",
                    message: format!("expected 4 weights, got {}", args.weights.len()),
                })?;
            let params = StageParams::Quality {
                params: QualityParams {
                    min_len: args.min_len,
                    max_len: args.max_len,
                    languages: args.languages.clone(),
                    max_perplexity: args.max_perplexity,
                    weights,
                    min_q: args.min_q,
                    scores_file: args
                        .scores_file
                        .as_ref()
                        .map(|p| p.display().to_string()),
                    scrub: !args.no_scrub,
                    scrub_rules: args
                        .scrub_rules
                        .as_ref()
                        .map(|p| p.display().to_string()),
                },
                scores_path: args.scores_file.clone(),
                scrub_rules_path: args.scrub_rules.clone(),
            };
            run_single_stage(&args.input, cli.out.as_deref(), &params, seed, &[])
        }
        Command::Aggregate(args) => {
            let params = StageParams::Aggregate {
                params: AggregateParams {
                    levels: args.levels,
                    branching: args.branching,
                    budget: args.budget,
                    diversity_weight: args.diversity_weight,
                    scores_file: args
                        .scores_file
                        .as_ref()
                        .map(|p| p.display().to_string()),
                    token_factor: args.token_factor,
                },
                scores_path: args.scores_file.clone(),
            };
            let overrides = [
                ("sequences", args.sequences),
                ("clusters", args.clusters),
            ];
            run_single_stage(&args.input, cli.out.as_deref(), &params, seed, &overrides)
        }
        Command::Longctx(args) => {
            let mode =
                LongctxMode::from_str(&args.mode).map_err(|message| CliError::InvalidArgument {
                    argument: "mode",
                    message,
                })?;
            let placement = parse_placement(&args.placement)?;
            let params = StageParams::Longctx(LongctxParams {
                mode,
                min_reduction: args.min_reduction,
                anchor_sigma: args.anchor_sigma,
                max_anchors: args.max_anchors,
                top_k: args.top_k,
                placement,
                target_length: args.target_length,
                token_factor: args.token_factor,
            });
            let overrides = [("audit", args.audit)];
            run_single_stage(&args.input, cli.out.as_deref(), &params, seed, &overrides)
        }
        Command::Schedule {
            cmd: ScheduleCmd::Plan(args),
        } => {
            let csv = mathcmd::schedule_plan_csv(&SchedulePlanArgs {
                alpha_min: args.alpha_min,
                alpha_max: args.alpha_max,
                t_mid: args.t_mid,
                tau_warm: args.tau_warm,
                step: args.step,
                length_stages: args.length_stages,
            })?;
            emit(cli.out.as_deref(), &csv)
        }
        Command::Reward {
            cmd: RewardCmd::Score(args),
        } => {
            let task =
                RewardTask::from_str(&args.task).map_err(|message| CliError::InvalidArgument {
                    argument: "task",
                    message,
                })?;
            let output = mathcmd::reward_score(task, &args.pred_file, &args.gold_file, args.gamma)?;
            emit(cli.out.as_deref(), &output)
        }
        Command::Rlmath {
            cmd: RlmathCmd::Grpo(args),
        } => {
            let config = GrpoConfig::new(args.epsilon, args.lambda, args.p_lo, args.p_hi)
                .map_err(|e| CliError::InvalidArgument {
                    argument: "grpo",
                    message: e.to_string(),
                })?;
            let output = mathcmd::rlmath_grpo(&args.group_file, &config)?;
            emit(cli.out.as_deref(), &output)
        }
        Command::Distill {
            cmd: DistillCmd::Abkd(args),
        } => {
            let output =
                mathcmd::distill_abkd(&args.pairs_file, args.alpha, args.beta, args.topk)?;
            emit(cli.out.as_deref(), &output)
        }
        Command::Pipeline { cmd } => {
            let config_path = cli
                .config
                .as_deref()
                .ok_or(CliError::MissingArgument("--config"))?;
            let config = PipelineConfig::load(config_path)?;
            let config_dir = config_path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .unwrap_or(Path::new("."))
                .to_path_buf();
            let overrides = PlanOverrides {
                seed: cli.seed,
                out_dir: cli.out.clone(),
            };
            let plan = build_plan(&config, &config_dir, &overrides)?;
            match cmd {
                PipelineCmd::Plan => {
                    let view = serde_json::to_string_pretty(&plan.view())
                        .expect("plan serializes");
                    println!("{view}");
                    Ok(())
                }
                PipelineCmd::Run => {
                    let report = run_plan(&plan)?;
                    let summary =
                        serde_json::to_string_pretty(&report).expect("report serializes");
                    println!("{summary}");
                    Ok(())
                }
            }
        }
    }
}

fn parse_placement(s: &str) -> Result<Placement, CliError> {
    match s {
        "prepend" => Ok(Placement::Prepend),
        "append" => Ok(Placement::Append),
        other => Err(CliError::InvalidArgument {
            argument: "placement",
            message: format!("unknown placement {other}; expected prepend or append"),
        }),
    }
}

/// Writes `content` to `--out` when given, stdout otherwise.
fn emit(out: Option<&Path>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Runs one stage over an input file and writes records, artifacts, and a
/// manifest next to the output path.
///
/// `artifact_overrides` maps artifact labels to explicit paths; artifacts
/// without an override land at `<out stem>.<label>.jsonl`.
fn run_single_stage(
    input: &Path,
    out: Option<&Path>,
    params: &StageParams,
    seed: u64,
    artifact_overrides: &[(&str, Option<PathBuf>)],
) -> Result<(), CliError> {
    let out = out.ok_or(CliError::MissingArgument("--out"))?;
    let kind = params.kind();
    let records = read_all(input).map_err(|e| CliError::Read {
        path: input.to_path_buf(),
        message: e.to_string(),
    })?;
    let input_count = records.len() as u64;

    let output = stages::execute(kind.as_str(), params, records, seed)?;

    let mut records_jsonl = String::new();
    for record in &output.records {
        records_jsonl.push_str(&serde_json::to_string(record).expect("record serializes"));
        records_jsonl.push('\n');
    }
    write_atomic(out, &records_jsonl)?;

    for artifact in &output.artifacts {
        let path = artifact_overrides
            .iter()
            .find(|(label, _)| *label == artifact.label)
            .and_then(|(_, path)| path.clone())
            .unwrap_or_else(|| out.with_extension(format!("{}.jsonl", artifact.label)));
        let mut content = String::new();
        for line in &artifact.lines {
            content.push_str(line);
            content.push('\n');
        }
        write_atomic(&path, &content)?;
    }

    let manifest = RunManifest {
        stage: kind.as_str().to_owned(),
        input_count,
        output_count: output.records.len() as u64,
        drops: output.drops,
        seed,
        config_digest: digest_params(params),
    };
    manifest.validate().map_err(|e| CliError::Stage {
        stage: kind.as_str().to_owned(),
        message: e.to_string(),
    })?;
    let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&out.with_extension("manifest.json"), &manifest_json)?;

    println!(
        "{}",
        serde_json::json!({
            "stage": kind.as_str(),
            "input_count": manifest.input_count,
            "output_count": manifest.output_count,
            "drops": manifest.drops,
        })
    );
    Ok(())
}
