//! Anchor detection, candidate verification, and document synthesis.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::oracle::{Candidate, EntropyOracle};
use super::LongCtxError;
use crate::record::CorpusRecord;
use crate::tokens::TokenCounter;

/// Sentinel line separating concatenated passages from the source document.
pub const PASSAGE_SEPARATOR: &str = "\n⟨CTX_SEP⟩\n";

/// Tokens of preceding context stored with each anchor.
const ANCHOR_CONTEXT_TOKENS: usize = 16;

/// A token position whose prediction entropy stands out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyAnchor {
    /// Token index in the source document.
    pub position: usize,
    /// Entropy at that position, in nats.
    pub entropy: f64,
    /// Up to [`ANCHOR_CONTEXT_TOKENS`] preceding tokens.
    pub context: String,
}

/// A candidate passage proven to fill an information gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifiedDependency {
    /// Anchor token index.
    pub anchor_position: usize,
    /// Id of the candidate passage.
    pub candidate_id: String,
    /// Anchor entropy without the candidate.
    pub entropy_before: f64,
    /// Anchor entropy with the candidate prepended.
    pub entropy_after: f64,
    /// Relative reduction `(before - after) / before`; strictly above the
    /// verification threshold for every retained entry.
    pub reduction: f64,
}

/// Audit row for one scored candidate, retained or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateAudit {
    pub anchor_position: usize,
    pub candidate_id: String,
    pub entropy_before: f64,
    /// Absent when the candidate was skipped before scoring.
    pub entropy_after: Option<f64>,
    pub retained: bool,
    /// Why the candidate was not retained, when it was not.
    pub reason: Option<String>,
}

/// Verification result: retained dependencies plus the full audit trail.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerificationOutcome {
    pub verified: Vec<VerifiedDependency>,
    pub audit: Vec<CandidateAudit>,
}

/// Which side of the source document receives the verified passages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Prepend,
    Append,
}

/// Finds token positions whose entropy exceeds the document's own
/// `mean + c * stddev` profile threshold.
pub fn find_entropy_anchors(
    doc: &str,
    oracle: &dyn EntropyOracle,
    c: f64,
) -> Result<Vec<EntropyAnchor>, LongCtxError> {
    let entropies = oracle.entropies("", doc);
    if entropies.is_empty() {
        return Err(LongCtxError::EmptyDocument);
    }
    let n = entropies.len() as f64;
    let mean = entropies.iter().sum::<f64>() / n;
    let variance = entropies.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n;
    let threshold = mean + c * variance.sqrt();

    let tokens: Vec<&str> = doc.split_whitespace().collect();
    Ok(entropies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > threshold)
        .map(|(position, &entropy)| EntropyAnchor {
            position,
            entropy,
            context: tokens[position.saturating_sub(ANCHOR_CONTEXT_TOKENS)..position].join(" "),
        })
        .collect())
}

/// Scores each candidate's effect on one anchor and retains those whose
/// relative entropy reduction strictly exceeds `min_reduction`.
pub fn verify_candidates(
    doc: &str,
    anchor: &EntropyAnchor,
    candidates: &[Candidate],
    oracle: &dyn EntropyOracle,
    min_reduction: f64,
) -> VerificationOutcome {
    let mut outcome = VerificationOutcome::default();
    for candidate in candidates {
        if anchor.entropy == 0.0 {
            outcome.audit.push(CandidateAudit {
                anchor_position: anchor.position,
                candidate_id: candidate.id.clone(),
                entropy_before: anchor.entropy,
                entropy_after: None,
                retained: false,
                reason: Some("anchor already certain".to_owned()),
            });
            continue;
        }
        let prefix = format!("{}{}", candidate.text, PASSAGE_SEPARATOR);
        let rescored = oracle.entropies(&prefix, doc);
        let entropy_after = rescored[anchor.position];
        let reduction = (anchor.entropy - entropy_after) / anchor.entropy;
        if reduction > min_reduction {
            outcome.verified.push(VerifiedDependency {
                anchor_position: anchor.position,
                candidate_id: candidate.id.clone(),
                entropy_before: anchor.entropy,
                entropy_after,
                reduction,
            });
            outcome.audit.push(CandidateAudit {
                anchor_position: anchor.position,
                candidate_id: candidate.id.clone(),
                entropy_before: anchor.entropy,
                entropy_after: Some(entropy_after),
                retained: true,
                reason: None,
            });
        } else {
            outcome.audit.push(CandidateAudit {
                anchor_position: anchor.position,
                candidate_id: candidate.id.clone(),
                entropy_before: anchor.entropy,
                entropy_after: Some(entropy_after),
                retained: false,
                reason: Some("reduction not above threshold".to_owned()),
            });
        }
    }
    outcome
}

/// Concatenates the verified passages onto the source document.
///
/// Passages are deduplicated by candidate id in first-verified order, then
/// shuffled by `seed`. The synthesized record keeps the source id and
/// metadata, annotated with the synthesis mode and passage count.
pub fn synthesize_long_doc(
    source: &CorpusRecord,
    verified: &[VerifiedDependency],
    candidates: &[Candidate],
    placement: Placement,
    seed: u64,
) -> Result<CorpusRecord, LongCtxError> {
    if verified.is_empty() {
        return Err(LongCtxError::NoVerifiedDependencies);
    }
    let mut passage_ids: Vec<&str> = Vec::new();
    for dep in verified {
        if !passage_ids.contains(&dep.candidate_id.as_str()) {
            passage_ids.push(&dep.candidate_id);
        }
    }
    let mut passages: Vec<&str> = Vec::with_capacity(passage_ids.len());
    for id in &passage_ids {
        let candidate = candidates
            .iter()
            .find(|c| c.id == *id)
            .ok_or_else(|| LongCtxError::UnknownCandidate((*id).to_owned()))?;
        passages.push(&candidate.text);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    passages.shuffle(&mut rng);

    let joined = passages.join(PASSAGE_SEPARATOR);
    let text = match placement {
        Placement::Prepend => format!("{joined}{PASSAGE_SEPARATOR}{}", source.text),
        Placement::Append => format!("{}{PASSAGE_SEPARATOR}{joined}", source.text),
    };

    let mut out = source.clone();
    out.text = text;
    out.metadata
        .insert("longctx_mode".to_owned(), "entropy".to_owned());
    out.metadata
        .insert("longctx_passages".to_owned(), passages.len().to_string());
    Ok(out)
}

/// Splits a document into paragraph-level meta-chunks at blank-line
/// boundaries.
pub fn split_meta_chunks(text: &str) -> Vec<String> {
    text.split("\n\n")
        .map(|piece| piece.trim_matches('\n'))
        .filter(|piece| !piece.trim().is_empty())
        .map(str::to_owned)
        .collect()
}

/// Stretches a document toward `target_tokens` by placing distractors
/// round-robin into the gaps between consecutive meta-chunks.
///
/// Chunk order is preserved and nothing is ever placed before the first
/// chunk. Insertion stops once the token count reaches the target or the
/// distractors run out; if nothing is inserted the document is returned
/// unchanged. Returns the record and the number of distractors inserted.
pub fn interleave_hard_negatives(
    source: &CorpusRecord,
    distractors: &[Candidate],
    target_tokens: usize,
    counter: &dyn TokenCounter,
) -> Result<(CorpusRecord, usize), LongCtxError> {
    let chunks = split_meta_chunks(&source.text);
    if chunks.is_empty() {
        return Err(LongCtxError::EmptyDocument);
    }
    let own_tokens = counter.count(&source.text);
    if target_tokens < own_tokens {
        return Err(LongCtxError::TargetTooSmall {
            target: target_tokens,
            required: own_tokens,
        });
    }

    let gaps = chunks.len() - 1;
    let mut gap_fill: Vec<Vec<&str>> = vec![Vec::new(); gaps];
    let mut inserted = 0usize;

    let assemble = |gap_fill: &[Vec<&str>]| {
        let mut parts: Vec<&str> = Vec::new();
        for (i, chunk) in chunks.iter().enumerate() {
            parts.push(chunk);
            if i < gaps {
                parts.extend(&gap_fill[i]);
            }
        }
        parts.join("\n\n")
    };

    if gaps > 0 {
        for (i, distractor) in distractors.iter().enumerate() {
            if counter.count(&assemble(&gap_fill)) >= target_tokens {
                break;
            }
            gap_fill[i % gaps].push(&distractor.text);
            inserted += 1;
        }
    }

    if inserted == 0 {
        return Ok((source.clone(), 0));
    }
    let mut out = source.clone();
    out.text = assemble(&gap_fill);
    out.metadata
        .insert("longctx_mode".to_owned(), "nextlong".to_owned());
    out.metadata
        .insert("longctx_distractors".to_owned(), inserted.to_string());
    Ok((out, inserted))
}
