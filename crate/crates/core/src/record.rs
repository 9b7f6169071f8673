//! Canonical record model and line-oriented record I/O.
//!
//! Every pipeline stage consumes and produces the same record shape: one JSON
//! object per line. Unknown fields round-trip untouched so files written by a
//! newer pipeline stay readable by an older one. Text is normalized once at
//! ingestion; downstream stages may assume LF line endings and bounded blank
//! runs outside fenced code blocks.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Origin bucket of a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceCategory {
    /// Public external corpora: advisories, write-ups, papers, forums.
    OpenExternal,
    /// First-party product documentation and telemetry descriptions.
    Product,
    /// Curated knowledge-base and reference documents.
    KnowledgeDoc,
    /// System, audit, and network logs.
    Log,
    /// Source code and configuration.
    Code,
}

impl SourceCategory {
    /// Stable snake_case name, matching the serialized form.
    pub fn as_str(self) -> &'static str {
        match self {
            SourceCategory::OpenExternal => "open_external",
            SourceCategory::Product => "product",
            SourceCategory::KnowledgeDoc => "knowledge_doc",
            SourceCategory::Log => "log",
            SourceCategory::Code => "code",
        }
    }
}

/// One normalized training document with provenance and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    /// Opaque unique identifier within a corpus file.
    pub id: String,
    /// Normalized plain text.
    pub text: String,
    /// Origin bucket.
    pub source_category: SourceCategory,
    /// Semantic anchor strings this record is organized around, such as CVE
    /// identifiers or product names.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anchors: Vec<String>,
    /// Free-form string metadata. Ordered map so serialization is stable.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    /// Optional dense embedding; all embeddings in one corpus file share one
    /// dimensionality.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    /// Fields this version does not model, preserved verbatim.
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl CorpusRecord {
    /// Minimal record with the given id, text, and category.
    pub fn new(id: impl Into<String>, text: impl Into<String>, source_category: SourceCategory) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            source_category,
            anchors: Vec::new(),
            metadata: BTreeMap::new(),
            embedding: None,
            extra: BTreeMap::new(),
        }
    }
}

/// Per-stage accounting: how many records went in, how many came out, and why
/// the difference left.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Stage name as invoked.
    pub stage: String,
    /// Records consumed.
    pub input_count: u64,
    /// Records produced.
    pub output_count: u64,
    /// Drop-reason histogram. Ordered map so serialization is stable.
    pub drops: BTreeMap<String, u64>,
    /// Seed the stage ran under.
    pub seed: u64,
    /// Fingerprint of the stage configuration.
    pub config_digest: String,
}

impl RunManifest {
    /// Checks that every consumed record is accounted for: input count must
    /// equal output count plus the sum of drop-reason counts.
    pub fn validate(&self) -> Result<(), RecordError> {
        let dropped: u64 = self.drops.values().sum();
        if self.input_count != self.output_count + dropped {
            return Err(RecordError::ManifestCountMismatch {
                input: self.input_count,
                output: self.output_count,
                dropped,
            });
        }
        Ok(())
    }
}

/// Errors from record parsing, validation, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record: {source}")]
    MalformedLine {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: record has empty id")]
    EmptyId { line: usize },
    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: record {id:?} has embedding of length {found}, corpus dimension is {expected}")]
    EmbeddingDimMismatch {
        line: usize,
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("manifest count mismatch: input {input} != output {output} + dropped {dropped}")]
    ManifestCountMismatch { input: u64, output: u64, dropped: u64 },
    #[error("cannot serialize record {id:?}: {source}")]
    Serialize {
        id: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Streaming reader over a line-oriented record source.
///
/// Yields records in input order. Each malformed line, duplicate id, or
/// embedding-dimension conflict is surfaced as an error item carrying its
/// 1-based line number; iteration can continue past record-level errors.
pub struct RecordReader<R> {
    lines: io::Lines<BufReader<R>>,
    line_no: usize,
    seen_ids: HashSet<String>,
    embedding_dim: Option<usize>,
}

impl RecordReader<File> {
    /// Opens a record file for streaming.
    pub fn open(path: &Path) -> Result<Self, RecordError> {
        let file = File::open(path).map_err(|source| RecordError::Open {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::new(file))
    }
}

impl<R: Read> RecordReader<R> {
    /// Wraps any byte source producing one JSON record per line.
    pub fn new(source: R) -> Self {
        Self {
            lines: BufReader::new(source).lines(),
            line_no: 0,
            seen_ids: HashSet::new(),
            embedding_dim: None,
        }
    }

    fn check(&mut self, record: CorpusRecord) -> Result<CorpusRecord, RecordError> {
        if record.id.is_empty() {
            return Err(RecordError::EmptyId { line: self.line_no });
        }
        if !self.seen_ids.insert(record.id.clone()) {
            return Err(RecordError::DuplicateId {
                line: self.line_no,
                id: record.id,
            });
        }
        if let Some(embedding) = &record.embedding {
            match self.embedding_dim {
                None => self.embedding_dim = Some(embedding.len()),
                Some(expected) if expected != embedding.len() => {
                    return Err(RecordError::EmbeddingDimMismatch {
                        line: self.line_no,
                        id: record.id,
                        expected,
                        found: embedding.len(),
                    });
                }
                Some(_) => {}
            }
        }
        Ok(record)
    }
}

impl<R: Read> Iterator for RecordReader<R> {
    type Item = Result<CorpusRecord, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = match self.lines.next()? {
            Ok(line) => line,
            Err(source) => return Some(Err(RecordError::Io(source))),
        };
        self.line_no += 1;
        let parsed = serde_json::from_str::<CorpusRecord>(&line).map_err(|source| {
            RecordError::MalformedLine {
                line: self.line_no,
                source,
            }
        });
        Some(parsed.and_then(|record| self.check(record)))
    }
}

/// Reads an entire record file strictly: the first malformed line, duplicate
/// id, or embedding-dimension conflict aborts the read.
pub fn read_all(path: &Path) -> Result<Vec<CorpusRecord>, RecordError> {
    RecordReader::open(path)?.collect()
}

/// Writes records as one JSON object per line, in the given order.
pub fn write_records(path: &Path, records: &[CorpusRecord]) -> Result<(), RecordError> {
    let file = File::create(path).map_err(|source| RecordError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = io::BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|source| RecordError::Serialize {
            id: record.id.clone(),
            source,
        })?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Validates and writes a manifest with stable key order, so identical runs
/// produce byte-identical files.
pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), RecordError> {
    manifest.validate()?;
    let mut body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    body.push('\n');
    let file = File::create(path).map_err(|source| RecordError::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = io::BufWriter::new(file);
    out.write_all(body.as_bytes())?;
    out.flush()?;
    Ok(())
}

/// Normalizes record text: line endings become LF, and runs of more than two
/// blank lines collapse to two. Lines inside fenced code blocks are kept
/// verbatim apart from the line-ending conversion.
pub fn normalize_text(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut out: Vec<&str> = Vec::new();
    let mut blank_run = 0usize;
    let mut in_fence = false;
    for line in unified.split('\n') {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            blank_run = 0;
            out.push(line);
            continue;
        }
        if !in_fence && line.trim().is_empty() {
            blank_run += 1;
            if blank_run > 2 {
                continue;
            }
        } else {
            blank_run = 0;
        }
        out.push(line);
    }
    out.join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn record(id: &str, text: &str) -> CorpusRecord {
        CorpusRecord::new(id, text, SourceCategory::OpenExternal)
    }

    fn read_str(input: &str) -> Vec<Result<CorpusRecord, RecordError>> {
        RecordReader::new(Cursor::new(input.to_owned())).collect()
    }

    #[test]
    fn three_line_fixture_reads_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.jsonl");
        let records = vec![record("r1", "alpha"), record("r2", "beta"), record("r3", "gamma")];
        write_records(&path, &records).unwrap();
        let back = read_all(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn empty_file_reads_as_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(read_all(&path).unwrap().is_empty());
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_all(Path::new("/nonexistent/records.jsonl")).unwrap_err();
        assert!(matches!(err, RecordError::Open { .. }));
    }

    #[test]
    fn malformed_third_line_is_named() {
        let mut lines: Vec<String> = (1..=5)
            .map(|i| serde_json::to_string(&record(&format!("r{i}"), "text")).unwrap())
            .collect();
        lines[2] = "{not json".to_owned();
        let results = read_str(&lines.join("\n"));
        assert_eq!(results.len(), 5);
        match &results[2] {
            Err(RecordError::MalformedLine { line, .. }) => assert_eq!(*line, 3),
            other => panic!("expected malformed-line error, got {other:?}"),
        }
        assert!(results[3].is_ok());
    }

    #[test]
    fn duplicate_id_is_rejected_with_line_number() {
        let input = format!(
            "{}\n{}",
            serde_json::to_string(&record("r1", "a")).unwrap(),
            serde_json::to_string(&record("r1", "b")).unwrap()
        );
        let results = read_str(&input);
        match &results[1] {
            Err(RecordError::DuplicateId { line, id }) => {
                assert_eq!(*line, 2);
                assert_eq!(id, "r1");
            }
            other => panic!("expected duplicate-id error, got {other:?}"),
        }
    }

    #[test]
    fn embedding_dimension_conflict_is_rejected() {
        let mut a = record("r1", "a");
        a.embedding = Some(vec![1.0, 0.0, 0.0]);
        let mut b = record("r2", "b");
        b.embedding = Some(vec![1.0, 0.0]);
        let input = format!(
            "{}\n{}",
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        let results = read_str(&input);
        match &results[1] {
            Err(RecordError::EmbeddingDimMismatch { expected, found, .. }) => {
                assert_eq!((*expected, *found), (3, 2));
            }
            other => panic!("expected dimension mismatch, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_round_trip() {
        let line = r#"{"id":"r1","text":"t","source_category":"log","review_state":"pending","batch":7}"#;
        let parsed: CorpusRecord = serde_json::from_str(line).unwrap();
        assert_eq!(parsed.extra.len(), 2);
        let back = serde_json::to_string(&parsed).unwrap();
        let reparsed: CorpusRecord = serde_json::from_str(&back).unwrap();
        assert_eq!(parsed, reparsed);
        assert_eq!(reparsed.extra["batch"], serde_json::json!(7));
    }

    #[test]
    fn manifest_zero_drop_case_is_consistent() {
        let manifest = RunManifest {
            stage: "dedup".into(),
            input_count: 10,
            output_count: 10,
            drops: BTreeMap::new(),
            seed: 1,
            config_digest: "0".repeat(16),
        };
        assert!(manifest.validate().is_ok());
    }

    #[test]
    fn manifest_accounts_for_drops() {
        let mut drops = BTreeMap::new();
        drops.insert("too_short".to_owned(), 3);
        let manifest = RunManifest {
            stage: "quality".into(),
            input_count: 10,
            output_count: 7,
            drops,
            seed: 1,
            config_digest: "0".repeat(16),
        };
        assert!(manifest.validate().is_ok());
    }

    #[test]
    fn manifest_count_mismatch_is_an_error() {
        let mut drops = BTreeMap::new();
        drops.insert("too_short".to_owned(), 2);
        let manifest = RunManifest {
            stage: "quality".into(),
            input_count: 10,
            output_count: 7,
            drops,
            seed: 1,
            config_digest: "0".repeat(16),
        };
        let err = manifest.validate().unwrap_err();
        assert!(err.to_string().contains("count mismatch"));
    }

    #[test]
    fn manifest_bytes_are_stable_across_writes() {
        let dir = tempfile::tempdir().unwrap();
        let mut drops = BTreeMap::new();
        drops.insert("near_duplicate".to_owned(), 2);
        drops.insert("exact_duplicate".to_owned(), 1);
        let manifest = RunManifest {
            stage: "dedup".into(),
            input_count: 10,
            output_count: 7,
            drops,
            seed: 42,
            config_digest: "abcd".repeat(4),
        };
        let p1 = dir.path().join("m1.json");
        let p2 = dir.path().join("m2.json");
        write_manifest(&p1, &manifest).unwrap();
        write_manifest(&p2, &manifest).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn normalize_unifies_line_endings() {
        assert_eq!(normalize_text("a\r\nb\rc\nd"), "a\nb\nc\nd");
    }

    #[test]
    fn normalize_collapses_long_blank_runs() {
        assert_eq!(normalize_text("a\n\n\n\n\n\nb"), "a\n\n\nb");
        assert_eq!(normalize_text("a\n\nb"), "a\n\nb");
    }

    #[test]
    fn normalize_keeps_fenced_blocks_verbatim() {
        let text = "intro\n```\nline1\n\n\n\n\nline2\n```\ntail";
        assert_eq!(normalize_text(text), text);
    }

    #[test]
    fn normalize_is_idempotent_on_mixed_input() {
        let text = "a\r\n\r\n\r\n\r\nb\n```sh\n\n\n\n\necho hi\n```";
        let once = normalize_text(text);
        assert_eq!(normalize_text(&once), once);
    }
}
