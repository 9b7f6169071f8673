//! Pipeline contract tests: planning errors, overrides, execution
//! accounting, failure isolation, and the binary's error reporting.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use sectrain_core::record::{write_records, CorpusRecord, RunManifest, SourceCategory};

use sectrain_cli::config::PipelineConfig;
use sectrain_cli::error::CliError;
use sectrain_cli::plan::{build_plan, PlanOverrides};
use sectrain_cli::run::run_plan;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sectrain"))
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("pipeline.toml");
    std::fs::write(&path, body).expect("write config");
    path
}

fn load_and_plan(dir: &Path, body: &str) -> Result<sectrain_cli::plan::ExecutionPlan, CliError> {
    let path = write_config(dir, body);
    let config = PipelineConfig::load(&path)?;
    build_plan(&config, dir, &PlanOverrides::default())
}

fn sample_records(count: usize) -> Vec<CorpusRecord> {
    (0..count)
        .map(|i| {
            let mut record = CorpusRecord::new(
                format!("r{i:03}"),
                format!("record number {i} with some text about packet filters"),
                SourceCategory::KnowledgeDoc,
            );
            record.embedding = Some(vec![i as f64, 1.0, 0.0]);
            record
        })
        .collect()
}

#[test]
fn unknown_stage_kind_is_a_config_error() {
    let dir = tempfile::tempdir().expect("tempdir");
    let err = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "frobnicate"
input = "corpus.jsonl"
"#,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "config_parse");
    assert!(err.to_string().contains("frobnicate"), "got: {err}");
}

#[test]
fn dangling_input_names_the_missing_path() {
    let dir = tempfile::tempdir().expect("tempdir");
    let err = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "ingest"
input = "does_not_exist.jsonl"
"#,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "dangling_input");
    assert!(
        err.to_string().contains("does_not_exist.jsonl"),
        "got: {err}"
    );
}

#[test]
fn forward_and_self_references_are_ordering_errors() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_records(&dir.path().join("corpus.jsonl"), &sample_records(2)).expect("write");

    let forward = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "ingest"
input = "late"

[[stage]]
kind = "dedup"
name = "late"
input = "corpus.jsonl"
"#,
    )
    .unwrap_err();
    assert_eq!(forward.kind(), "stage_order_violation");
    assert!(forward.to_string().contains("late"), "got: {forward}");

    let cycle = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "ingest"
name = "loop"
input = "loop"
"#,
    )
    .unwrap_err();
    assert_eq!(cycle.kind(), "stage_order_violation");
}

#[test]
fn duplicate_stage_names_are_rejected() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_records(&dir.path().join("corpus.jsonl"), &sample_records(2)).expect("write");
    let err = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "ingest"
name = "twice"
input = "corpus.jsonl"

[[stage]]
kind = "dedup"
name = "twice"
input = "twice"
"#,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "duplicate_stage_name");
}

#[test]
fn unknown_parameter_keys_fail_at_plan_time() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_records(&dir.path().join("corpus.jsonl"), &sample_records(2)).expect("write");
    let err = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "dedup"
input = "corpus.jsonl"
[stage.params]
shingle_wdith = 5
"#,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "stage_params");
    assert!(err.to_string().contains("shingle_wdith"), "got: {err}");
}

#[test]
fn missing_scores_file_fails_at_plan_time() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_records(&dir.path().join("corpus.jsonl"), &sample_records(2)).expect("write");
    let err = load_and_plan(
        dir.path(),
        r#"
[[stage]]
kind = "quality"
input = "corpus.jsonl"
[stage.params]
scores_file = "nowhere.jsonl"
"#,
    )
    .unwrap_err();
    assert_eq!(err.kind(), "stage_params");
    assert!(err.to_string().contains("nowhere.jsonl"), "got: {err}");
}

#[test]
fn seed_only_config_changes_touch_only_the_seed_digest() {
    let dir = tempfile::tempdir().expect("tempdir");
    write_records(&dir.path().join("corpus.jsonl"), &sample_records(2)).expect("write");
    let body = r#"
seed = {SEED}

[[stage]]
kind = "ingest"
input = "corpus.jsonl"

[[stage]]
kind = "dedup"
input = "ingest"
[stage.params]
tiers = ["exact"]
"#;
    let plan_a = {
        let path = write_config(dir.path(), &body.replace("{SEED}", "1"));
        let config = PipelineConfig::load(&path).expect("load");
        build_plan(&config, dir.path(), &PlanOverrides::default()).expect("plan")
    };
    let plan_b = {
        let path = write_config(dir.path(), &body.replace("{SEED}", "2"));
        let config = PipelineConfig::load(&path).expect("load");
        build_plan(&config, dir.path(), &PlanOverrides::default()).expect("plan")
    };

    assert_ne!(plan_a.seed_digest, plan_b.seed_digest);
    let strip = |plan: &sectrain_cli::plan::ExecutionPlan| {
        let mut view = serde_json::to_value(plan.view()).expect("view");
        let map = view.as_object_mut().expect("object");
        map.remove("seed");
        map.remove("seed_digest");
        view
    };
    assert_eq!(strip(&plan_a), strip(&plan_b));
}

#[test]
fn empty_corpus_runs_to_success_with_zero_counts() {
    let dir = tempfile::tempdir().expect("tempdir");
    std::fs::write(dir.path().join("corpus.jsonl"), "").expect("write");
    let plan = load_and_plan(
        dir.path(),
        r#"
out_dir = "out"

[[stage]]
kind = "ingest"
input = "corpus.jsonl"

[[stage]]
kind = "dedup"
input = "ingest"

[[stage]]
kind = "quality"
input = "dedup"

[[stage]]
kind = "aggregate"
input = "quality"

[[stage]]
kind = "longctx"
input = "aggregate"
"#,
    )
    .expect("plan");
    let report = run_plan(&plan).expect("empty corpus must succeed");
    assert_eq!(report.stages.len(), 5);
    for stage in &report.stages {
        assert_eq!(stage.input_count, 0, "stage {}", stage.name);
        assert_eq!(stage.output_count, 0, "stage {}", stage.name);
        assert!(stage.drops.is_empty(), "stage {}", stage.name);
    }
    for stage in &plan.stages {
        let manifest: RunManifest = serde_json::from_str(
            &std::fs::read_to_string(
                plan.out_dir
                    .join(format!("{}.manifest.json", stage.file_stem())),
            )
            .expect("manifest exists"),
        )
        .expect("manifest parses");
        manifest.validate().expect("manifest consistent");
        assert_eq!(manifest.input_count, 0);
    }
}

#[test]
fn failing_stage_halts_and_leaves_earlier_outputs_intact() {
    let dir = tempfile::tempdir().expect("tempdir");
    // No embeddings, so the aggregate stage must fail by record id.
    let records: Vec<CorpusRecord> = sample_records(3)
        .into_iter()
        .map(|mut r| {
            r.embedding = None;
            r
        })
        .collect();
    write_records(&dir.path().join("corpus.jsonl"), &records).expect("write");
    let plan = load_and_plan(
        dir.path(),
        r#"
out_dir = "out"

[[stage]]
kind = "ingest"
input = "corpus.jsonl"

[[stage]]
kind = "aggregate"
input = "ingest"

[[stage]]
kind = "longctx"
input = "aggregate"
"#,
    )
    .expect("plan");

    let err = run_plan(&plan).unwrap_err();
    assert_eq!(err.kind(), "stage_failed");
    assert!(err.to_string().contains("aggregate"), "got: {err}");
    assert!(err.to_string().contains("r000"), "got: {err}");

    let ingest_out = &plan.stages[0].output;
    assert!(ingest_out.is_file(), "first stage output must survive");
    let lines = std::fs::read_to_string(ingest_out).expect("readable");
    assert_eq!(lines.lines().count(), 3);
    assert!(
        !plan.stages[1].output.exists(),
        "failed stage must not leave a records file"
    );
    assert!(
        !plan.stages[2].output.exists(),
        "stages after the failure must not run"
    );
}

#[test]
fn manifests_account_for_every_record() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut records = sample_records(6);
    // One exact duplicate and one empty record.
    records[4].text = records[1].text.clone();
    records[5].text = "   ".to_owned();
    write_records(&dir.path().join("corpus.jsonl"), &records).expect("write");
    let plan = load_and_plan(
        dir.path(),
        r#"
out_dir = "out"

[[stage]]
kind = "ingest"
input = "corpus.jsonl"

[[stage]]
kind = "dedup"
input = "ingest"
[stage.params]
tiers = ["exact"]
"#,
    )
    .expect("plan");
    let report = run_plan(&plan).expect("run");

    assert_eq!(report.stages[0].input_count, 6);
    assert_eq!(report.stages[0].output_count, 5);
    assert_eq!(
        report.stages[0].drops,
        BTreeMap::from([("empty_text".to_owned(), 1)])
    );
    assert_eq!(report.stages[1].input_count, 5);
    assert_eq!(report.stages[1].output_count, 4);
    assert_eq!(
        report.stages[1].drops,
        BTreeMap::from([("exact_duplicate".to_owned(), 1)])
    );

    let drops_file = plan.out_dir.join("02_dedup.drops.jsonl");
    let detail = std::fs::read_to_string(drops_file).expect("drops artifact");
    let entry: serde_json::Value =
        serde_json::from_str(detail.lines().next().expect("one drop")).expect("json");
    assert_eq!(entry["id"], "r004");
    assert_eq!(entry["reason"], "exact_duplicate");
    assert_eq!(entry["duplicate_of"], "r001");
}

#[test]
fn binary_reports_errors_as_json_on_stderr() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = write_config(
        dir.path(),
        r#"
[[stage]]
kind = "ingest"
input = "missing.jsonl"
"#,
    );
    let output = binary()
        .args(["pipeline", "run", "--config"])
        .arg(&config)
        .output()
        .expect("binary runs");
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).expect("utf8");
    let report: serde_json::Value =
        serde_json::from_str(stderr.lines().last().expect("error line")).expect("stderr is JSON");
    assert_eq!(report["error"]["kind"], "dangling_input");
    assert!(report["error"]["message"]
        .as_str()
        .expect("message")
        .contains("missing.jsonl"));
}

#[test]
fn binary_runs_a_single_stage_with_flags() {
    let dir = tempfile::tempdir().expect("tempdir");
    let mut records = sample_records(4);
    records[3].text = records[0].text.clone();
    write_records(&dir.path().join("corpus.jsonl"), &records).expect("write");
    let out = dir.path().join("deduped.jsonl");
    let drops = dir.path().join("dropped.jsonl");

    let output = binary()
        .arg("dedup")
        .arg("--in")
        .arg(dir.path().join("corpus.jsonl"))
        .arg("--out")
        .arg(&out)
        .arg("--drops")
        .arg(&drops)
        .args(["--tiers", "exact,minhash", "--seed", "9"])
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );

    let kept = std::fs::read_to_string(&out).expect("output exists");
    assert_eq!(kept.lines().count(), 3);
    let dropped = std::fs::read_to_string(&drops).expect("drops exists");
    assert_eq!(dropped.lines().count(), 1);
    let manifest: RunManifest = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("deduped.manifest.json")).expect("manifest"),
    )
    .expect("manifest parses");
    assert_eq!(manifest.seed, 9);
    manifest.validate().expect("manifest consistent");
}

#[test]
fn binary_emits_schedule_csv() {
    let output = binary()
        .args([
            "schedule",
            "plan",
            "--alpha-min",
            "0.05",
            "--alpha-max",
            "0.30",
            "--t-mid",
            "1000",
            "--tau-warm",
            "100",
            "--step",
            "500",
        ])
        .output()
        .expect("binary runs");
    assert!(output.status.success());
    let csv = String::from_utf8(output.stdout).expect("utf8");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,alpha,max_tokens");
    assert!(lines[1].starts_with("0,"));
    assert!(lines[2].starts_with("500,0.175,"));
    assert!(lines[3].starts_with("1000,"));
}
