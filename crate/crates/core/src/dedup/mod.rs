//! Three-tier deduplication.
//!
//! Tier one drops byte-identical texts ([`exact_dedup`]). Tier two finds
//! near duplicates by MinHash signatures over token shingles, banded into an
//! LSH index ([`minhash_signature`], [`lsh_near_duplicates`]). Tier three
//! works in a sparse feature space: records are encoded to high-dimensional
//! sparse vectors and a density-aware pruning loop removes the most
//! redundant nodes until no pair is more similar than the threshold
//! ([`encode_sparse_features`], [`feature_dedup`]).
//!
//! Every tier keeps the lowest id (equivalently, the earliest record) of a
//! duplicate group, so rerunning a tier on its own output is a no-op.

mod exact;
mod feature;
mod minhash;
mod sparse;

pub use exact::{exact_dedup, ExactDrop};
pub use feature::{feature_dedup, NeighborhoodGraph};
pub use minhash::{
    estimate_jaccard, lsh_near_duplicates, minhash_signature, shingle_set, MinHashSignature,
    NearDupCluster,
};
pub use sparse::{encode_sparse_features, sparse_cosine, SparseFeatureVector};

/// Errors from signature construction, banding, and feature encoding.
#[derive(Debug, thiserror::Error)]
pub enum DedupError {
    #[error("text has {tokens} tokens, too short to shingle at width {width}")]
    TooShortToShingle { tokens: usize, width: usize },
    #[error("signatures are incompatible: {0}")]
    IncompatibleSignatures(String),
    #[error("bands {bands} x rows {rows} != signature length {hashes}")]
    BandRowMismatch {
        bands: usize,
        rows: usize,
        hashes: usize,
    },
    #[error("embedding has dimension {found}, encoder expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("similarity threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("sparse vectors have mixed dimensionalities: {0} and {1}")]
    MixedDimensionality(u32, u32),
    #[error("{0} must be at least 1")]
    ZeroParameter(&'static str),
}
