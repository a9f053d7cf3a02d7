use alloc::vec::Vec;

use super::ReductionError;
use crate::matrix::{distance, Matrix};

/// Exact k-nearest-neighbor lists, one per point, nearest first.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    /// Builds a graph from precomputed lists. Each point must list exactly
    /// `k` neighbors sorted by ascending distance, without itself.
    pub fn from_lists(k: usize, indices: Vec<usize>, distances: Vec<f64>) -> Result<Self, ReductionError> {
        if k == 0 || indices.len() != distances.len() || indices.len() % k != 0 {
            return Err(ReductionError::InvalidGraph {
                reason: "neighbor lists must all have length k",
            });
        }
        let n = indices.len() / k;
        for i in 0..n {
            let idx = &indices[i * k..(i + 1) * k];
            let dist = &distances[i * k..(i + 1) * k];
            if idx.iter().any(|&j| j == i || j >= n) {
                return Err(ReductionError::InvalidGraph {
                    reason: "neighbor index out of range or self edge",
                });
            }
            if dist.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) || dist.windows(2).any(|w| w[0] > w[1]) {
                return Err(ReductionError::InvalidGraph {
                    reason: "distances must be finite, non-negative and sorted",
                });
            }
        }
        Ok(Self { k, indices, distances })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

fn neighbors_of(x: &Matrix<f64>, i: usize, k: usize) -> Vec<(f64, usize)> {
    let query = x.row(i);
    let mut candidates: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&j| j != i)
        .map(|j| (distance(query, x.row(j)), j))
        .collect();
    let by_distance_then_index = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if candidates.len() > k {
        candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        candidates.truncate(k);
    }
    candidates.sort_unstable_by(by_distance_then_index);
    candidates
}

/// Brute-force Euclidean kNN. Ties in distance go to the lower index.
pub fn knn_graph(x: &Matrix<f64>, k: usize) -> Result<NeighborGraph, ReductionError> {
    let n = x.rows();
    if k == 0 || n <= k {
        return Err(ReductionError::TooFewPoints { points: n, needed: k + 1 });
    }
    if !x.is_finite() {
        return Err(ReductionError::NonFinite);
    }

    #[cfg(feature = "parallel")]
    let lists: Vec<Vec<(f64, usize)>> = {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(|i| neighbors_of(x, i, k)).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let lists: Vec<Vec<(f64, usize)>> = (0..n).map(|i| neighbors_of(x, i, k)).collect();

    let mut indices = Vec::with_capacity(n * k);
    let mut distances = Vec::with_capacity(n * k);
    for list in lists {
        for (d, j) in list {
            indices.push(j);
            distances.push(d);
        }
    }
    Ok(NeighborGraph { k, indices, distances })
}
