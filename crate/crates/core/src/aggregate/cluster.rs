//! Hierarchical clustering by recursive spherical k-means.
//!
//! Each level splits every cluster into `branching` children using k-means
//! on unit-normalized embeddings with cosine similarity. Initialization is
//! a seeded farthest-point sweep, iteration is capped at 50 rounds, and a
//! subtree with fewer records than `branching` stops splitting: its records
//! keep a single-child path at every finer level. Cluster ids are
//! path-encoded, `child_id = parent_id * branching + slot`, so refinement
//! is recoverable by integer division.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::AggregateError;
use crate::util::splitmix64;

/// Maximum k-means rounds per split.
const MAX_ROUNDS: usize = 50;

/// Nested cluster assignments, coarse to fine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterTree {
    /// Record ids, in input order.
    pub ids: Vec<String>,
    /// `assignments[level][record]` is the record's cluster id at that
    /// level; level 0 is the coarsest.
    pub assignments: Vec<Vec<u64>>,
    /// Branching factor the ids were path-encoded with.
    pub branching: u64,
}

impl ClusterTree {
    /// Cluster ids at the finest level, aligned with `ids`.
    pub fn finest(&self) -> &[u64] {
        self.assignments.last().expect("at least one level")
    }

    /// Cluster path for one record, coarse to fine.
    pub fn path(&self, record: usize) -> Vec<u64> {
        self.assignments.iter().map(|level| level[record]).collect()
    }
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// One k-means split over the given member indices. Returns each member's
/// child slot in `0..k`.
fn spherical_split(points: &[Vec<f64>], members: &[usize], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points[members[0]].len();

    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[members[rng.random_range(0..members.len())]].clone());
    while centroids.len() < k {
        let mut best = (members[0], f64::NEG_INFINITY);
        for &m in members {
            let nearest = centroids
                .iter()
                .map(|c| dot(&points[m], c))
                .fold(f64::NEG_INFINITY, f64::max);
            let distance = 1.0 - nearest;
            if distance > best.1 {
                best = (m, distance);
            }
        }
        centroids.push(points[best.0].clone());
    }

    let mut slots = vec![0usize; members.len()];
    for _ in 0..MAX_ROUNDS {
        let mut changed = false;
        for (pos, &m) in members.iter().enumerate() {
            let mut best_slot = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (slot, centroid) in centroids.iter().enumerate() {
                let sim = dot(&points[m], centroid);
                if sim > best_sim {
                    best_sim = sim;
                    best_slot = slot;
                }
            }
            if slots[pos] != best_slot {
                slots[pos] = best_slot;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        for (slot, centroid) in centroids.iter_mut().enumerate() {
            let mut sum = vec![0.0; dim];
            let mut count = 0usize;
            for (pos, &m) in members.iter().enumerate() {
                if slots[pos] == slot {
                    for (acc, &x) in sum.iter_mut().zip(&points[m]) {
                        *acc += x;
                    }
                    count += 1;
                }
            }
            if count > 0 {
                *centroid = normalize(&sum);
            }
        }
    }
    slots
}

/// Clusters records into `levels` nested partitions of arity `branching`.
pub fn cluster_hierarchical(
    ids: &[String],
    embeddings: &[Vec<f64>],
    levels: usize,
    branching: usize,
    seed: u64,
) -> Result<ClusterTree, AggregateError> {
    if ids.len() != embeddings.len() {
        return Err(AggregateError::LengthMismatch {
            ids: ids.len(),
            values: embeddings.len(),
            what: "embeddings",
        });
    }
    if levels == 0 {
        return Err(AggregateError::ZeroLevels);
    }
    if branching < 2 {
        return Err(AggregateError::BranchingTooSmall);
    }
    if let Some(first) = embeddings.first() {
        for e in embeddings {
            if e.len() != first.len() {
                return Err(AggregateError::MixedDimensions(first.len(), e.len()));
            }
        }
    }

    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| normalize(e)).collect();
    let mut assignments = vec![vec![0u64; ids.len()]; levels];

    // Work stack of (member indices, next level to assign, parent path id).
    let mut stack: Vec<(Vec<usize>, usize, u64)> = vec![((0..ids.len()).collect(), 0, 0)];
    while let Some((members, level, parent)) = stack.pop() {
        if level == levels || members.is_empty() {
            continue;
        }
        if members.len() < branching {
            // Too small to split: carry a single-child path to the bottom.
            for deeper in level..levels {
                let id = parent * branching.pow((deeper - level + 1) as u32) as u64;
                for &m in &members {
                    assignments[deeper][m] = id;
                }
            }
            continue;
        }
        let subtree_seed = splitmix64(seed ^ splitmix64(parent.wrapping_add((level as u64) << 40)));
        let slots = spherical_split(&points, &members, branching, subtree_seed);
        let mut children: Vec<Vec<usize>> = vec![Vec::new(); branching];
        for (pos, &m) in members.iter().enumerate() {
            let child_id = parent * branching as u64 + slots[pos] as u64;
            assignments[level][m] = child_id;
            children[slots[pos]].push(m);
        }
        for (slot, child_members) in children.into_iter().enumerate() {
            let child_id = parent * branching as u64 + slot as u64;
            stack.push((child_members, level + 1, child_id));
        }
    }

    Ok(ClusterTree {
        ids: ids.to_vec(),
        assignments,
        branching: branching as u64,
    })
}
