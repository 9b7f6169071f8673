//! Error type shared by the planner, runner, and command layer.

use std::path::PathBuf;

use thiserror::Error;

/// Anything that can stop a command.
///
/// Every variant carries enough context to print a useful one-line message;
/// [`CliError::kind`] gives a stable machine-readable tag for the error JSON
/// emitted on stderr.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read config {path}: {message}")]
    ConfigRead { path: PathBuf, message: String },

    #[error("config {path} is not valid TOML: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("stage {stage} has invalid parameters: {message}")]
    StageParams { stage: String, message: String },

    #[error("stage name {0} is used more than once")]
    DuplicateStageName(String),

    #[error("unknown stage kind {0}")]
    UnknownStageKind(String),

    #[error("stage {stage} reads from stage {input}, which does not run before it")]
    StageOrderViolation { stage: String, input: String },

    #[error("stage {stage} reads from {path}, which does not exist")]
    DanglingInput { stage: String, path: PathBuf },

    #[error("stage {stage} failed: {message}")]
    Stage { stage: String, message: String },

    #[error("cannot write {path}: {message}")]
    Write { path: PathBuf, message: String },

    #[error("cannot read {path}: {message}")]
    Read { path: PathBuf, message: String },

    #[error("missing required argument {0}")]
    MissingArgument(&'static str),

    #[error("invalid argument {argument}: {message}")]
    InvalidArgument {
        argument: &'static str,
        message: String,
    },

    #[error("{path} line {line}: {message}")]
    MalformedLine {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no gold entry for id {0}")]
    MissingGold(String),
}

impl CliError {
    /// Stable tag for the machine-readable error report.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigRead { .. } => "config_read",
            CliError::ConfigParse { .. } => "config_parse",
            CliError::StageParams { .. } => "stage_params",
            CliError::DuplicateStageName(_) => "duplicate_stage_name",
            CliError::UnknownStageKind(_) => "unknown_stage_kind",
            CliError::StageOrderViolation { .. } => "stage_order_violation",
            CliError::DanglingInput { .. } => "dangling_input",
            CliError::Stage { .. } => "stage_failed",
            CliError::Write { .. } => "write",
            CliError::Read { .. } => "read",
            CliError::MissingArgument(_) => "missing_argument",
            CliError::InvalidArgument { .. } => "invalid_argument",
            CliError::MalformedLine { .. } => "malformed_line",
            CliError::MissingGold(_) => "missing_gold",
        }
    }

    /// Report printed to stderr on failure: one JSON object, one line.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.to_string() }
        })
        .to_string()
    }
}
