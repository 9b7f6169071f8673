//! Pipeline configuration: the TOML dialect and the per-stage parameter
//! structs it deserializes into.
//!
//! A config names a seed, an output directory, and an ordered list of
//! stages. Each stage has a `kind`, an optional unique `name` (defaulting
//! to the kind), an `input` that is either the name of an earlier stage or
//! a path relative to the config file, and a kind-specific `params` table.
//! Unknown parameter keys are rejected so typos fail at plan time instead
//! of silently running with defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sectrain_core::longctx::Placement;

use crate::error::CliError;

/// Parsed pipeline configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Seed for every seeded stage; the command line can override it.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Directory the run writes into; the command line can override it.
    #[serde(default)]
    pub out_dir: Option<String>,
    /// Stages in execution order.
    #[serde(default, rename = "stage")]
    pub stages: Vec<StageConfig>,
}

impl PipelineConfig {
    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| CliError::ConfigParse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// One `[[stage]]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StageConfig {
    /// Which stage implementation runs.
    pub kind: StageKind,
    /// Unique stage name; defaults to the kind string.
    #[serde(default)]
    pub name: Option<String>,
    /// Name of an earlier stage, or a path relative to the config file.
    pub input: String,
    /// Kind-specific parameters.
    #[serde(default)]
    pub params: toml::Table,
}

impl StageConfig {
    /// Effective stage name.
    pub fn name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.kind.as_str())
    }
}

/// The five record-level stage kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageKind {
    Ingest,
    Dedup,
    Quality,
    Aggregate,
    Longctx,
}

impl StageKind {
    /// Lowercase name used in configs, file names, and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Ingest => "ingest",
            StageKind::Dedup => "dedup",
            StageKind::Quality => "quality",
            StageKind::Aggregate => "aggregate",
            StageKind::Longctx => "longctx",
        }
    }
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deduplication tiers, applied in the order listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DedupTier {
    Exact,
    Minhash,
    Feature,
}

impl FromStr for DedupTier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(DedupTier::Exact),
            "minhash" => Ok(DedupTier::Minhash),
            "feature" => Ok(DedupTier::Feature),
            other => Err(format!(
                "unknown tier {other}; expected exact, minhash, or feature"
            )),
        }
    }
}

/// Ingest has no knobs yet; the empty struct keeps the config shape uniform
/// and rejects stray keys.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct IngestParams {}

/// Deduplication stage parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct DedupParams {
    /// Tiers to apply, in order.
    pub tiers: Vec<DedupTier>,
    /// Shingle width in tokens for the near-duplicate tier.
    pub shingle_width: usize,
    /// Signature length for the near-duplicate tier.
    pub num_hashes: usize,
    /// LSH band count; `bands * rows` must equal `num_hashes`.
    pub bands: usize,
    /// Rows per LSH band.
    pub rows: usize,
    /// Estimated-similarity cutoff for confirming near-duplicate pairs.
    pub jaccard_threshold: f64,
    /// Cosine cutoff for the feature tier.
    pub tau: f64,
    /// Sparse feature space size for the feature tier.
    pub k_dim: u32,
    /// Active features kept per record in the feature tier.
    pub k_active: usize,
}

impl Default for DedupParams {
    fn default() -> Self {
        Self {
            tiers: vec![DedupTier::Exact, DedupTier::Minhash],
            shingle_width: 5,
            num_hashes: 128,
            bands: 16,
            rows: 8,
            jaccard_threshold: 0.8,
            tau: 0.9,
            k_dim: 65_536,
            k_active: 64,
        }
    }
}

/// Quality stage parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct QualityParams {
    /// Minimum text length in characters.
    pub min_len: usize,
    /// Maximum text length in characters.
    pub max_len: usize,
    /// Accepted language labels; empty disables the language check.
    pub languages: Vec<String>,
    /// Per-byte perplexity cutoff against a model fitted on the stage input;
    /// absent disables the check.
    pub max_perplexity: Option<f64>,
    /// Convex weights for the four judge axes.
    pub weights: [f64; 4],
    /// Composite-score cutoff for records present in the scores file;
    /// absent keeps every scored record.
    pub min_q: Option<f64>,
    /// Path (relative to the config) of a scores file: one JSON object per
    /// line with `id` and a four-element `scores` array.
    pub scores_file: Option<String>,
    /// Whether to scrub sensitive spans from record text.
    pub scrub: bool,
    /// Path (relative to the config) of a scrub rule file overriding the
    /// built-in thresholds.
    pub scrub_rules: Option<String>,
}

impl Default for QualityParams {
    fn default() -> Self {
        Self {
            min_len: 1,
            max_len: 1_000_000,
            languages: Vec::new(),
            max_perplexity: None,
            weights: [0.25; 4],
            min_q: None,
            scores_file: None,
            scrub: true,
            scrub_rules: None,
        }
    }
}

/// Declarative scrub rule file: thresholds for the pattern passes.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScrubRuleSpec {
    /// Minimum run length treated as an encoded blob.
    pub base64_min: usize,
    /// Minimum run length treated as a session token.
    pub hex_min: usize,
}

impl Default for ScrubRuleSpec {
    fn default() -> Self {
        Self {
            base64_min: 128,
            hex_min: 32,
        }
    }
}

/// Aggregation stage parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct AggregateParams {
    /// Cluster hierarchy depth.
    pub levels: usize,
    /// Split factor per hierarchy level.
    pub branching: usize,
    /// Token budget per training sequence.
    pub budget: usize,
    /// Blend between informativeness and category novelty when packing.
    pub diversity_weight: f64,
    /// Optional per-record informativeness overrides, same format as the
    /// quality scores file but with a single `score` number per line.
    pub scores_file: Option<String>,
    /// Multiplier the token counter applies to whitespace counts.
    pub token_factor: f64,
}

impl Default for AggregateParams {
    fn default() -> Self {
        Self {
            levels: 2,
            branching: 4,
            budget: 2048,
            diversity_weight: 0.3,
            scores_file: None,
            token_factor: 1.3,
        }
    }
}

/// Long-context synthesis mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LongctxMode {
    /// Verified-dependency synthesis from entropy anchors.
    Entropy,
    /// Hard-negative interleaving toward a target length.
    Nextlong,
}

impl FromStr for LongctxMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entropy" => Ok(LongctxMode::Entropy),
            "nextlong" => Ok(LongctxMode::Nextlong),
            other => Err(format!("unknown mode {other}; expected entropy or nextlong")),
        }
    }
}

/// Long-context stage parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LongctxParams {
    /// Synthesis mode.
    pub mode: LongctxMode,
    /// Entropy mode: minimum relative entropy reduction a candidate must
    /// exceed to count as a verified dependency.
    pub min_reduction: f64,
    /// Entropy mode: anchor threshold in standard deviations above the mean
    /// token entropy.
    pub anchor_sigma: f64,
    /// Entropy mode: at most this many anchors are verified per document.
    pub max_anchors: usize,
    /// Candidates retrieved per document.
    pub top_k: usize,
    /// Entropy mode: which side of the document receives verified passages.
    pub placement: Placement,
    /// Nextlong mode: token length the interleaved document grows toward.
    pub target_length: usize,
    /// Multiplier the token counter applies to whitespace counts.
    pub token_factor: f64,
}

impl Default for LongctxParams {
    fn default() -> Self {
        Self {
            mode: LongctxMode::Entropy,
            min_reduction: 0.4,
            anchor_sigma: 1.0,
            max_anchors: 3,
            top_k: 4,
            placement: Placement::Prepend,
            target_length: 1024,
            token_factor: 1.3,
        }
    }
}

/// Typed, fully resolved parameters for one planned stage.
///
/// File-valued parameters are resolved against the config directory at plan
/// time; the digest is taken over the parameters as written, so moving a
/// config tree does not change its plan digests.
#[derive(Debug, Clone, PartialEq)]
pub enum StageParams {
    Ingest(IngestParams),
    Dedup(DedupParams),
    Quality {
        params: QualityParams,
        scores_path: Option<PathBuf>,
        scrub_rules_path: Option<PathBuf>,
    },
    Aggregate {
        params: AggregateParams,
        scores_path: Option<PathBuf>,
    },
    Longctx(LongctxParams),
}

impl StageParams {
    /// Stage kind these parameters belong to.
    pub fn kind(&self) -> StageKind {
        match self {
            StageParams::Ingest(_) => StageKind::Ingest,
            StageParams::Dedup(_) => StageKind::Dedup,
            StageParams::Quality { .. } => StageKind::Quality,
            StageParams::Aggregate { .. } => StageKind::Aggregate,
            StageParams::Longctx(_) => StageKind::Longctx,
        }
    }

    /// Canonical JSON of the parameters as configured, used for digests.
    pub fn canonical_json(&self) -> String {
        match self {
            StageParams::Ingest(p) => serde_json::to_string(p),
            StageParams::Dedup(p) => serde_json::to_string(p),
            StageParams::Quality { params, .. } => serde_json::to_string(params),
            StageParams::Aggregate { params, .. } => serde_json::to_string(params),
            StageParams::Longctx(p) => serde_json::to_string(p),
        }
        .expect("stage parameters serialize")
    }
}

/// Deserializes a stage's `params` table into its typed form, resolving
/// file-valued parameters against `base_dir`.
pub fn typed_params(
    stage: &StageConfig,
    base_dir: &Path,
) -> Result<StageParams, CliError> {
    let table = stage.params.clone();
    let bad = |e: toml::de::Error| CliError::StageParams {
        stage: stage.name().to_owned(),
        message: e.to_string(),
    };
    match stage.kind {
        StageKind::Ingest => Ok(StageParams::Ingest(table.try_into().map_err(bad)?)),
        StageKind::Dedup => Ok(StageParams::Dedup(table.try_into().map_err(bad)?)),
        StageKind::Quality => {
            let params: QualityParams = table.try_into().map_err(bad)?;
            let scores_path = params.scores_file.as_ref().map(|p| base_dir.join(p));
            let scrub_rules_path = params.scrub_rules.as_ref().map(|p| base_dir.join(p));
            Ok(StageParams::Quality {
                params,
                scores_path,
                scrub_rules_path,
            })
        }
        StageKind::Aggregate => {
            let params: AggregateParams = table.try_into().map_err(bad)?;
            let scores_path = params.scores_file.as_ref().map(|p| base_dir.join(p));
            Ok(StageParams::Aggregate {
                params,
                scores_path,
            })
        }
        StageKind::Longctx => Ok(StageParams::Longctx(table.try_into().map_err(bad)?)),
    }
}
