//! Quality: scrubbing, heuristic filtering, and judge-score gating.
//!
//! Order per record: sensitive spans are scrubbed first, then the length,
//! perplexity, and language checks run over the scrubbed text, and
//! finally records present in the scores file get a composite quality
//! score and are gated against `min_q`. The perplexity reference model is
//! fitted on this stage's own input texts, so the check flags records
//! that look unlike the batch they arrived with. Records absent from the
//! scores file are kept without a score.

use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use sectrain_core::ngram::ByteTrigramModel;
use sectrain_core::quality::{
    composite_quality, heuristic_filter, scrub_sensitive, FilterThresholds, FilterVerdict,
    NgramPerplexity, ScrubRules, TrigramLanguageClassifier,
};
use sectrain_core::record::CorpusRecord;

use crate::config::{QualityParams, ScrubRuleSpec};

use super::StageOutput;

/// One line of the judge scores file.
#[derive(Debug, Deserialize)]
struct ScoreLine {
    id: String,
    scores: [f64; 4],
}

fn load_scores(path: &Path) -> Result<HashMap<String, [f64; 4]>, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read scores file {}: {e}", path.display()))?;
    let mut scores = HashMap::new();
    for (number, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ScoreLine = serde_json::from_str(line)
            .map_err(|e| format!("{} line {}: {e}", path.display(), number + 1))?;
        scores.insert(parsed.id, parsed.scores);
    }
    Ok(scores)
}

fn load_scrub_rules(path: Option<&Path>) -> Result<ScrubRules, String> {
    let Some(path) = path else {
        return Ok(ScrubRules::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read scrub rules {}: {e}", path.display()))?;
    let spec: ScrubRuleSpec = serde_json::from_str(&text)
        .map_err(|e| format!("scrub rules {}: {e}", path.display()))?;
    Ok(ScrubRules::new(spec.base64_min, spec.hex_min))
}

pub fn run(
    records: Vec<CorpusRecord>,
    params: &QualityParams,
    scores_path: Option<&Path>,
    scrub_rules_path: Option<&Path>,
) -> Result<StageOutput, String> {
    let thresholds = FilterThresholds {
        min_len: params.min_len,
        max_len: params.max_len,
        allowed_languages: params.languages.clone(),
        max_perplexity: params.max_perplexity.unwrap_or(f64::INFINITY),
    };
    thresholds.validate().map_err(|e| e.to_string())?;

    let scores = match scores_path {
        Some(path) => load_scores(path)?,
        None => HashMap::new(),
    };
    let rules = load_scrub_rules(scrub_rules_path)?;
    let classifier = TrigramLanguageClassifier::builtin();
    let reference = ByteTrigramModel::fit(records.iter().map(|r| r.text.as_str()));
    let perplexity = NgramPerplexity::new(reference);

    let mut out = StageOutput::default();
    for mut record in records {
        if params.scrub {
            let (scrubbed, report) = scrub_sensitive(&record.text, &rules);
            if !report.spans.is_empty() {
                record.text = scrubbed;
                record.metadata.insert(
                    "scrub_redactions".to_owned(),
                    report.spans.len().to_string(),
                );
            }
        }

        match heuristic_filter(&record, &thresholds, &classifier, &perplexity) {
            FilterVerdict::Drop(reason) => {
                *out.drops.entry(reason.as_str().to_owned()).or_insert(0) += 1;
                continue;
            }
            FilterVerdict::Keep => {}
        }

        if let Some(axes) = scores.get(&record.id) {
            let score =
                composite_quality(*axes, params.weights).map_err(|e| e.to_string())?;
            if let Some(min_q) = params.min_q {
                if score.q < min_q {
                    *out.drops.entry("low_quality".to_owned()).or_insert(0) += 1;
                    continue;
                }
            }
            record
                .metadata
                .insert("quality_q".to_owned(), score.q.to_string());
        }

        out.records.push(record);
    }
    Ok(out)
}
