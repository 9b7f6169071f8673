//! MinHash signatures and LSH candidate generation for near-duplicate
//! detection.
//!
//! Texts are lowercased, split on whitespace, and shingled into overlapping
//! `w`-token windows. Each shingle is hashed once; a signature stores, for
//! each of `H` seeded linear permutations, the minimum permuted shingle
//! hash. The fraction of agreeing positions between two signatures is an
//! unbiased estimate of the Jaccard similarity of the underlying shingle
//! sets. Banding the signature into `b` bands of `r` rows turns the
//! pairwise search into a bucket lookup.

use std::collections::{HashMap, HashSet};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DedupError;
use crate::tokens::lowercase_tokens;
use crate::util::fnv1a64;

/// MinHash signature of one text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature {
    /// Per-permutation minima, length `H`.
    pub hashes: Vec<u64>,
    /// Token width of the shingles.
    pub shingle_width: usize,
    /// Seed the permutations were drawn from.
    pub seed: u64,
}

/// A group of mutually near-duplicate records.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearDupCluster {
    /// Member ids in ascending order; the first is the keeper.
    pub ids: Vec<String>,
}

impl NearDupCluster {
    /// Id retained for this cluster: the lowest member id.
    pub fn keeper(&self) -> &str {
        &self.ids[0]
    }

    /// Ids marked droppable: every member except the keeper.
    pub fn droppable(&self) -> &[String] {
        &self.ids[1..]
    }
}

/// Distinct hashed `w`-token shingles of `text`.
///
/// Shingle identity is the FNV hash of the window's tokens joined by a
/// separator byte that cannot occur inside a token.
pub fn shingle_set(text: &str, w: usize) -> HashSet<u64> {
    let tokens = lowercase_tokens(text);
    let mut shingles = HashSet::new();
    if tokens.len() < w || w == 0 {
        return shingles;
    }
    for window in tokens.windows(w) {
        let mut buf = Vec::new();
        for (i, token) in window.iter().enumerate() {
            if i > 0 {
                buf.push(0x1f);
            }
            buf.extend_from_slice(token.as_bytes());
        }
        shingles.insert(fnv1a64(&buf));
    }
    shingles
}

fn permutations(h: usize, seed: u64) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..h)
        .map(|_| (rng.next_u64() | 1, rng.next_u64()))
        .collect()
}

/// Computes the `H`-slot MinHash signature of `text` over `w`-token
/// shingles.
pub fn minhash_signature(
    text: &str,
    w: usize,
    h: usize,
    seed: u64,
) -> Result<MinHashSignature, DedupError> {
    if w == 0 {
        return Err(DedupError::ZeroParameter("shingle width"));
    }
    if h == 0 {
        return Err(DedupError::ZeroParameter("hash count"));
    }
    let shingles = shingle_set(text, w);
    if shingles.is_empty() {
        return Err(DedupError::TooShortToShingle {
            tokens: lowercase_tokens(text).len(),
            width: w,
        });
    }
    let hashes = permutations(h, seed)
        .into_iter()
        .map(|(a, b)| {
            shingles
                .iter()
                .map(|&x| a.wrapping_mul(x).wrapping_add(b))
                .min()
                .expect("shingle set nonempty")
        })
        .collect();
    Ok(MinHashSignature {
        hashes,
        shingle_width: w,
        seed,
    })
}

/// Estimates Jaccard similarity as the fraction of agreeing signature
/// positions.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, DedupError> {
    if a.hashes.len() != b.hashes.len() {
        return Err(DedupError::IncompatibleSignatures(format!(
            "lengths {} and {}",
            a.hashes.len(),
            b.hashes.len()
        )));
    }
    if a.shingle_width != b.shingle_width || a.seed != b.seed {
        return Err(DedupError::IncompatibleSignatures(
            "different shingle width or seed".into(),
        ));
    }
    let agree = a
        .hashes
        .iter()
        .zip(&b.hashes)
        .filter(|(x, y)| x == y)
        .count();
    Ok(agree as f64 / a.hashes.len() as f64)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Finds clusters of near-duplicate records from banded signatures.
///
/// Signatures sharing all `rows` values in any band become candidate pairs;
/// candidates whose signature agreement reaches `jaccard_threshold` are
/// confirmed, and clusters are the connected components of confirmed pairs.
/// Within each cluster every id except the lowest is droppable.
pub fn lsh_near_duplicates(
    entries: &[(String, MinHashSignature)],
    bands: usize,
    rows: usize,
    jaccard_threshold: f64,
) -> Result<Vec<NearDupCluster>, DedupError> {
    if bands == 0 || rows == 0 {
        return Err(DedupError::ZeroParameter("bands and rows"));
    }
    for (_, sig) in entries {
        if sig.hashes.len() != bands * rows {
            return Err(DedupError::BandRowMismatch {
                bands,
                rows,
                hashes: sig.hashes.len(),
            });
        }
    }

    let mut buckets: HashMap<(usize, u64), Vec<usize>> = HashMap::new();
    for (idx, (_, sig)) in entries.iter().enumerate() {
        for band in 0..bands {
            let slice = &sig.hashes[band * rows..(band + 1) * rows];
            let mut bytes = Vec::with_capacity(rows * 8);
            for value in slice {
                bytes.extend_from_slice(&value.to_le_bytes());
            }
            buckets.entry((band, fnv1a64(&bytes))).or_default().push(idx);
        }
    }

    let mut candidates: HashSet<(usize, usize)> = HashSet::new();
    for members in buckets.values() {
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                let (a, b) = (members[i].min(members[j]), members[i].max(members[j]));
                candidates.insert((a, b));
            }
        }
    }

    let mut components = UnionFind::new(entries.len());
    for &(a, b) in &candidates {
        let agreement = estimate_jaccard(&entries[a].1, &entries[b].1)?;
        if agreement >= jaccard_threshold {
            components.union(a, b);
        }
    }

    let mut groups: HashMap<usize, Vec<&str>> = HashMap::new();
    for idx in 0..entries.len() {
        let root = components.find(idx);
        groups.entry(root).or_default().push(&entries[idx].0);
    }
    let mut clusters: Vec<NearDupCluster> = groups
        .into_values()
        .filter(|ids| ids.len() > 1)
        .map(|mut ids| {
            ids.sort_unstable();
            NearDupCluster {
                ids: ids.into_iter().map(str::to_owned).collect(),
            }
        })
        .collect();
    clusters.sort_by(|a, b| a.ids[0].cmp(&b.ids[0]));
    Ok(clusters)
}
