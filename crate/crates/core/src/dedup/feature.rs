//! Density-aware pruning in the sparse feature space.
//!
//! Records whose sparse vectors are more similar than a threshold form an
//! undirected neighborhood graph. The pruning loop repeatedly removes the
//! node with the highest local density, defined as the sum of its incident
//! edge weights, until no edge remains. Survivors are pairwise less similar
//! than the threshold.

use std::collections::BTreeMap;

use super::{sparse_cosine, DedupError, SparseFeatureVector};

/// Undirected similarity graph over record indices.
#[derive(Debug, Clone)]
pub struct NeighborhoodGraph {
    /// Similarity threshold every edge meets.
    pub tau: f64,
    /// Adjacency: for each node, its neighbors and edge weights in
    /// ascending neighbor order.
    pub adjacency: Vec<BTreeMap<usize, f64>>,
}

impl NeighborhoodGraph {
    /// Builds the graph by thresholding all pairwise cosines at `tau`.
    pub fn build(vectors: &[SparseFeatureVector], tau: f64) -> Result<Self, DedupError> {
        if !(0.0 < tau && tau < 1.0) {
            return Err(DedupError::InvalidThreshold(tau));
        }
        if let Some(first) = vectors.first() {
            for v in vectors {
                if v.dim != first.dim {
                    return Err(DedupError::MixedDimensionality(first.dim, v.dim));
                }
            }
        }
        let mut adjacency = vec![BTreeMap::new(); vectors.len()];
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                let weight = sparse_cosine(&vectors[i], &vectors[j]);
                if weight >= tau {
                    adjacency[i].insert(j, weight);
                    adjacency[j].insert(i, weight);
                }
            }
        }
        Ok(Self { tau, adjacency })
    }

    /// Number of edges in the graph.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeMap::len).sum::<usize>() / 2
    }
}

/// Prunes the neighborhood graph down to an edge-free survivor set.
///
/// Each iteration recomputes every remaining node's density (sum of edge
/// weights to remaining neighbors, accumulated in ascending neighbor order)
/// and removes the densest node; density ties remove the highest index, so
/// the earliest record of a tied group survives longest. Returns the
/// retained indices in ascending order.
pub fn feature_dedup(
    vectors: &[SparseFeatureVector],
    tau: f64,
) -> Result<Vec<usize>, DedupError> {
    let graph = NeighborhoodGraph::build(vectors, tau)?;
    let mut alive = vec![true; vectors.len()];
    let mut remaining_edges = graph.edge_count();

    while remaining_edges > 0 {
        let mut densest: Option<(usize, f64)> = None;
        for node in 0..vectors.len() {
            if !alive[node] {
                continue;
            }
            let density: f64 = graph.adjacency[node]
                .iter()
                .filter(|(neighbor, _)| alive[**neighbor])
                .map(|(_, weight)| *weight)
                .sum();
            let replace = match densest {
                None => true,
                Some((_, best)) => density >= best,
            };
            if replace {
                densest = Some((node, density));
            }
        }
        let (victim, _) = densest.expect("edges remain, so a live node exists");
        alive[victim] = false;
        remaining_edges -= graph.adjacency[victim]
            .iter()
            .filter(|(neighbor, _)| alive[**neighbor])
            .count();
    }

    Ok((0..vectors.len()).filter(|&i| alive[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vector(pairs: &[(u32, f64)]) -> SparseFeatureVector {
        SparseFeatureVector {
            indices: pairs.iter().map(|(i, _)| *i).collect(),
            values: pairs.iter().map(|(_, v)| *v).collect(),
            dim: 1024,
        }
    }

    #[test]
    fn duplicate_pair_loses_one_keeps_orthogonal() {
        let vectors = vec![
            vector(&[(0, 1.0), (1, 1.0)]),
            vector(&[(0, 1.0), (1, 1.0)]),
            vector(&[(5, 1.0)]),
        ];
        let survivors = feature_dedup(&vectors, 0.9).unwrap();
        assert_eq!(survivors.len(), 2);
        assert!(survivors.contains(&2));
        assert!(survivors.contains(&0), "tie must keep the earliest record");
    }

    #[test]
    fn dissimilar_set_is_fully_retained() {
        let vectors = vec![
            vector(&[(0, 1.0)]),
            vector(&[(1, 1.0)]),
            vector(&[(2, 1.0)]),
            vector(&[(3, 1.0)]),
        ];
        let survivors = feature_dedup(&vectors, 0.5).unwrap();
        assert_eq!(survivors, vec![0, 1, 2, 3]);
    }

    #[test]
    fn planted_clique_keeps_exactly_one_member() {
        // Five mutually similar vectors plus three distinct ones: the clique
        // must collapse to a single survivor, giving four total.
        let mut vectors = Vec::new();
        for i in 0..5 {
            vectors.push(vector(&[(0, 10.0), (1, 10.0), (10 + i, 0.1)]));
        }
        vectors.push(vector(&[(100, 1.0)]));
        vectors.push(vector(&[(200, 1.0)]));
        vectors.push(vector(&[(300, 1.0)]));
        let graph = NeighborhoodGraph::build(&vectors, 0.9).unwrap();
        assert_eq!(graph.edge_count(), 10);
        let survivors = feature_dedup(&vectors, 0.9).unwrap();
        assert_eq!(survivors.len(), 4);
        assert_eq!(survivors[1..], [5, 6, 7]);
        assert!(survivors[0] < 5);
    }

    #[test]
    fn survivors_have_no_similar_pair_left() {
        let mut vectors = Vec::new();
        for group in 0..6u32 {
            for member in 0..4u32 {
                vectors.push(vector(&[
                    (group * 2, 5.0),
                    (group * 2 + 1, 5.0),
                    (100 + group * 10 + member, 0.5),
                ]));
            }
        }
        let tau = 0.85;
        let survivors = feature_dedup(&vectors, tau).unwrap();
        for (a, &i) in survivors.iter().enumerate() {
            for &j in &survivors[a + 1..] {
                let cos = sparse_cosine(&vectors[i], &vectors[j]);
                assert!(cos < tau, "survivors {i},{j} still have cosine {cos}");
            }
        }
    }

    #[test]
    fn threshold_must_be_a_proper_fraction() {
        assert!(matches!(
            feature_dedup(&[], 1.0),
            Err(DedupError::InvalidThreshold(_))
        ));
        assert!(matches!(
            feature_dedup(&[], 0.0),
            Err(DedupError::InvalidThreshold(_))
        ));
    }
}
