//! Dedup: exact, near-duplicate, and feature-space tiers.
//!
//! Tiers run in the configured order, each over the survivors of the
//! previous one. Records a tier cannot examine pass through it: texts too
//! short to shingle skip the near-duplicate tier, and records without an
//! embedding skip the feature tier. Every drop is recorded in a side
//! artifact with its reason and, when known, the id kept in its place.

use std::collections::HashMap;

use serde::Serialize;

use sectrain_core::dedup::{
    exact_dedup, encode_sparse_features, feature_dedup, lsh_near_duplicates,
    minhash_signature, DedupError,
};
use sectrain_core::record::CorpusRecord;

use crate::config::{DedupParams, DedupTier};

use super::{json_line, StageOutput};

/// One dropped record, as written to the drops artifact.
#[derive(Debug, Clone, Serialize)]
struct DropEntry {
    id: String,
    reason: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    duplicate_of: Option<String>,
}

pub fn run(
    mut records: Vec<CorpusRecord>,
    params: &DedupParams,
    seed: u64,
) -> Result<StageOutput, String> {
    if params.bands * params.rows != params.num_hashes {
        return Err(format!(
            "bands ({}) times rows ({}) must equal num_hashes ({})",
            params.bands, params.rows, params.num_hashes
        ));
    }

    let mut detail: Vec<DropEntry> = Vec::new();
    let mut out = StageOutput::default();

    for tier in &params.tiers {
        match tier {
            DedupTier::Exact => {
                let (kept, dropped) = exact_dedup(records);
                records = kept;
                for drop in dropped {
                    detail.push(DropEntry {
                        id: drop.id,
                        reason: "exact_duplicate",
                        duplicate_of: Some(drop.duplicate_of),
                    });
                    *out.drops.entry("exact_duplicate".to_owned()).or_insert(0) += 1;
                }
            }
            DedupTier::Minhash => {
                let mut entries = Vec::new();
                for record in &records {
                    match minhash_signature(
                        &record.text,
                        params.shingle_width,
                        params.num_hashes,
                        seed,
                    ) {
                        Ok(sig) => entries.push((record.id.clone(), sig)),
                        Err(DedupError::TooShortToShingle { .. }) => {}
                        Err(e) => return Err(e.to_string()),
                    }
                }
                let clusters = lsh_near_duplicates(
                    &entries,
                    params.bands,
                    params.rows,
                    params.jaccard_threshold,
                )
                .map_err(|e| e.to_string())?;
                let mut keeper_of: HashMap<String, String> = HashMap::new();
                for cluster in &clusters {
                    for id in cluster.droppable() {
                        keeper_of.insert(id.clone(), cluster.keeper().to_owned());
                    }
                }
                let mut near = 0u64;
                records.retain(|record| match keeper_of.get(&record.id) {
                    Some(keeper) => {
                        detail.push(DropEntry {
                            id: record.id.clone(),
                            reason: "near_duplicate",
                            duplicate_of: Some(keeper.clone()),
                        });
                        near += 1;
                        false
                    }
                    None => true,
                });
                if near > 0 {
                    *out.drops.entry("near_duplicate".to_owned()).or_insert(0) += near;
                }
            }
            DedupTier::Feature => {
                let embedded: Vec<usize> = records
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.embedding.is_some())
                    .map(|(i, _)| i)
                    .collect();
                if embedded.is_empty() {
                    continue;
                }
                let dim = records[embedded[0]]
                    .embedding
                    .as_ref()
                    .expect("filtered on embedding")
                    .len();
                let mut vectors = Vec::with_capacity(embedded.len());
                for &i in &embedded {
                    let embedding = records[i].embedding.as_ref().expect("filtered");
                    let vector = encode_sparse_features(
                        embedding,
                        dim,
                        params.k_dim,
                        params.k_active,
                        seed,
                    )
                    .map_err(|e| format!("record {}: {e}", records[i].id))?;
                    vectors.push(vector);
                }
                let survivors = feature_dedup(&vectors, params.tau).map_err(|e| e.to_string())?;
                let survivor_set: Vec<bool> = {
                    let mut s = vec![false; embedded.len()];
                    for &v in &survivors {
                        s[v] = true;
                    }
                    s
                };
                let dropped_records: std::collections::HashSet<usize> = embedded
                    .iter()
                    .enumerate()
                    .filter(|(pos, _)| !survivor_set[*pos])
                    .map(|(_, &record_index)| record_index)
                    .collect();
                if dropped_records.is_empty() {
                    continue;
                }
                let mut index = 0usize;
                records.retain(|record| {
                    let drop = dropped_records.contains(&index);
                    if drop {
                        detail.push(DropEntry {
                            id: record.id.clone(),
                            reason: "feature_duplicate",
                            duplicate_of: None,
                        });
                    }
                    index += 1;
                    !drop
                });
                *out
                    .drops
                    .entry("feature_duplicate".to_owned())
                    .or_insert(0) += dropped_records.len() as u64;
            }
        }
    }

    out.records = records;
    out.artifacts.push(super::Artifact {
        label: "drops",
        lines: detail.iter().map(json_line).collect(),
    });
    Ok(out)
}
