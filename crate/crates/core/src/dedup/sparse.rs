//! Sparse feature encoding for semantic deduplication.
//!
//! Dense record embeddings are lifted into a high-dimensional sparse space
//! (the corpus-wide dimensionality `K`, 65,536 in the reference setting)
//! where redundancy shows up as near-identical supports. The shipped
//! encoder is a seeded random projection that keeps the `k_active` largest
//! coordinate magnitudes; a trained sparse autoencoder can replace it behind
//! the same signature since only the output type is contracted.
//!
//! Projection entries are generated lazily from `(seed, feature, input)`
//! keys, so no `K x d` matrix is ever stored.

use serde::{Deserialize, Serialize};

use super::DedupError;
use crate::util::keyed_uniform;

/// Sparse nonnegative feature vector in a `K`-dimensional space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFeatureVector {
    /// Strictly increasing feature indices in `[0, dim)`.
    pub indices: Vec<u32>,
    /// Positive magnitudes, aligned with `indices`.
    pub values: Vec<f64>,
    /// Feature-space dimensionality `K`, fixed corpus-wide.
    pub dim: u32,
}

impl SparseFeatureVector {
    /// Euclidean norm of the vector.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Encodes a dense embedding into the sparse feature space.
///
/// Each of the `k_dim` features is the dot product of the embedding with a
/// seeded uniform random row; the `k_active` largest absolute activations
/// are kept (ties prefer the lower feature index) and stored as magnitudes.
/// A zero embedding has empty support.
pub fn encode_sparse_features(
    embedding: &[f64],
    expected_dim: usize,
    k_dim: u32,
    k_active: usize,
    seed: u64,
) -> Result<SparseFeatureVector, DedupError> {
    if embedding.len() != expected_dim {
        return Err(DedupError::DimensionMismatch {
            expected: expected_dim,
            found: embedding.len(),
        });
    }
    if k_dim == 0 {
        return Err(DedupError::ZeroParameter("feature dimensionality"));
    }
    if k_active == 0 {
        return Err(DedupError::ZeroParameter("active feature count"));
    }

    let mut activations: Vec<(u32, f64)> = (0..k_dim)
        .map(|k| {
            let value: f64 = embedding
                .iter()
                .enumerate()
                .map(|(j, &e)| keyed_uniform(seed, u64::from(k), j as u64) * e)
                .sum();
            (k, value.abs())
        })
        .filter(|(_, magnitude)| *magnitude > 0.0)
        .collect();
    activations.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    activations.truncate(k_active);
    activations.sort_by_key(|(k, _)| *k);

    Ok(SparseFeatureVector {
        indices: activations.iter().map(|(k, _)| *k).collect(),
        values: activations.iter().map(|(_, v)| *v).collect(),
        dim: k_dim,
    })
}

/// Cosine similarity between two sparse vectors of the same dimensionality.
///
/// Returns 0 when either vector has empty support. Both arguments must come
/// from the same feature space; [`feature_dedup`](super::feature_dedup)
/// validates this corpus-wide.
pub fn sparse_cosine(a: &SparseFeatureVector, b: &SparseFeatureVector) -> f64 {
    debug_assert_eq!(a.dim, b.dim);
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    let (mut i, mut j) = (0, 0);
    while i < a.indices.len() && j < b.indices.len() {
        match a.indices[i].cmp(&b.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a.values[i] * b.values[j];
                i += 1;
                j += 1;
            }
        }
    }
    dot / (na * nb)
}

#[cfg(test)]
mod tests {
    use super::*;

    const K: u32 = 4096;

    #[test]
    fn identical_embeddings_encode_identically() {
        let e = vec![0.3, -1.2, 0.8, 0.05];
        let a = encode_sparse_features(&e, 4, K, 64, 11).unwrap();
        let b = encode_sparse_features(&e, 4, K, 64, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.indices.len() <= 64);
        assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
        assert!(a.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn zero_embedding_has_empty_support() {
        let v = encode_sparse_features(&[0.0; 4], 4, K, 64, 11).unwrap();
        assert!(v.indices.is_empty());
        assert!(v.values.is_empty());
        assert_eq!(sparse_cosine(&v, &v), 0.0);
    }

    #[test]
    fn scaled_copies_have_cosine_one() {
        let e: Vec<f64> = vec![0.5, -0.25, 1.0, 0.125];
        let scaled: Vec<f64> = e.iter().map(|x| x * 4.0).collect();
        let a = encode_sparse_features(&e, 4, K, 64, 11).unwrap();
        let b = encode_sparse_features(&scaled, 4, K, 64, 11).unwrap();
        assert_eq!(a.indices, b.indices);
        assert!((sparse_cosine(&a, &b) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = encode_sparse_features(&[1.0, 2.0], 4, K, 64, 11).unwrap_err();
        assert!(matches!(
            err,
            DedupError::DimensionMismatch {
                expected: 4,
                found: 2
            }
        ));
    }

    #[test]
    fn cosine_agrees_with_dense_reference() {
        let e1 = vec![1.0, 0.2, -0.7, 0.4];
        let e2 = vec![-0.3, 0.9, 0.1, 0.6];
        let a = encode_sparse_features(&e1, 4, K, K as usize, 11).unwrap();
        let b = encode_sparse_features(&e2, 4, K, K as usize, 11).unwrap();
        // With k_active = K nothing is truncated, so the sparse cosine must
        // match a dense cosine over the full magnitude vectors.
        let mut da = vec![0.0f64; K as usize];
        for (i, &idx) in a.indices.iter().enumerate() {
            da[idx as usize] = a.values[i];
        }
        let mut db = vec![0.0f64; K as usize];
        for (i, &idx) in b.indices.iter().enumerate() {
            db[idx as usize] = b.values[i];
        }
        let dot: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let dense = dot / (da.iter().map(|x| x * x).sum::<f64>().sqrt()
            * db.iter().map(|x| x * x).sum::<f64>().sqrt());
        assert!((sparse_cosine(&a, &b) - dense).abs() < 1e-12);
    }
}
