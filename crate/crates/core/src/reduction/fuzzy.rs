//! Local bandwidth calibration and the fuzzy simplicial set.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::NeighborGraph;

pub const SIGMA_MIN: f64 = 1e-12;
pub const SIGMA_MAX: f64 = 1e4;
const BISECTION_STEPS: usize = 64;

/// Per-point `rho` (nearest-neighbor distance) and `sigma` (bandwidth).
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedKnn {
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// `sum_j exp(-max(0, d_j - rho) / sigma)`.
pub fn membership_sum(distances: &[f64], rho: f64, sigma: f64) -> f64 {
    distances.iter().map(|&d| libm::exp(-(d - rho).max(0.0) / sigma)).sum()
}

/// Bisection for the bandwidth that makes the membership sum equal
/// `log2(k)`. When the target is unreachable inside `[SIGMA_MIN, SIGMA_MAX]`
/// the result sits at the nearer bracket end; this happens for example when
/// all `k` distances are equal and every term is exactly 1.
pub fn calibrate_sigma(distances: &[f64], rho: f64) -> f64 {
    let target = libm::log2(distances.len() as f64);
    let (mut lo, mut hi) = (SIGMA_MIN, SIGMA_MAX);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if membership_sum(distances, rho, mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn smooth_knn(graph: &NeighborGraph) -> SmoothedKnn {
    let n = graph.len();
    let mut rho = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for i in 0..n {
        let d = graph.distances(i);
        let r = d[0];
        rho.push(r);
        sigma.push(calibrate_sigma(d, r));
    }
    SmoothedKnn { rho, sigma }
}

/// Symmetric weighted graph without self loops, weights in `(0, 1]`.
/// Each undirected edge is stored once as `(i, j, w)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl FuzzyGraph {
    /// Collects undirected edges; zero weights are dropped, weights above 1
    /// or non-finite are rejected by returning `None`.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Option<Self> {
        let mut map = BTreeMap::new();
        for (i, j, w) in edges {
            if i == j || i >= n || j >= n || !(0.0..=1.0).contains(&w) {
                return None;
            }
            if w > 0.0 {
                map.insert((i.min(j), i.max(j)), w);
            }
        }
        Some(Self {
            n,
            edges: map.into_iter().map(|((i, j), w)| (i, j, w)).collect(),
        })
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map_or(0.0, |pos| self.edges[pos].2)
    }

    /// Weighted degree of every vertex.
    pub fn degrees(&self) -> Vec<f64> {
        let mut deg = alloc::vec![0.0; self.n];
        for &(i, j, w) in &self.edges {
            deg[i] += w;
            deg[j] += w;
        }
        deg
    }
}

/// Directed memberships `a_ij = exp(-max(0, d_ij - rho_i) / sigma_i)`
/// combined by the probabilistic t-conorm `a + a^T - a * a^T`, evaluated as
/// `1 - (1 - a)(1 - a^T)` so a full membership stays exactly 1.
pub fn membership_strengths(graph: &NeighborGraph, smoothed: &SmoothedKnn) -> FuzzyGraph {
    let n = graph.len();
    let mut directed: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for i in 0..n {
        for (&j, &d) in graph.neighbors(i).iter().zip(graph.distances(i)) {
            let a = libm::exp(-(d - smoothed.rho[i]).max(0.0) / smoothed.sigma[i]);
            let entry = directed.entry((i.min(j), i.max(j))).or_insert((0.0, 0.0));
            if i < j {
                entry.0 = a;
            } else {
                entry.1 = a;
            }
        }
    }
    let edges = directed
        .into_iter()
        .map(|((i, j), (a, b))| (i, j, 1.0 - (1.0 - a) * (1.0 - b)))
        .filter(|&(_, _, w)| w > 0.0)
        .collect();
    FuzzyGraph { n, edges }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::knn_graph;
    use crate::Matrix;
    use alloc::vec;

    #[test]
    fn equal_distances_clamp_to_bracket_minimum() {
        let sigma = calibrate_sigma(&[2.0; 4], 2.0);
        assert!(sigma < 1e-9, "sigma = {sigma}");
    }

    #[test]
    fn bisection_residual() {
        let d = [1.0, 2.0, 3.0, 4.0];
        let sigma = calibrate_sigma(&d, 1.0);
        assert!((membership_sum(&d, 1.0, sigma) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn rho_is_nearest_distance() {
        let x = Matrix::from_vec(4, 1, vec![0.0, 1.0, 3.0, 7.0]).unwrap();
        let g = knn_graph(&x, 2).unwrap();
        let s = smooth_knn(&g);
        for i in 0..4 {
            assert_eq!(s.rho[i], g.distances(i)[0]);
            assert!(s.sigma[i] > 0.0);
        }
    }

    #[test]
    fn t_conorm_cases() {
        // Mutual nearest neighbors: both directed weights are 1.
        let g = NeighborGraph::from_lists(1, vec![1, 0], vec![2.0, 2.0]).unwrap();
        let s = smooth_knn(&g);
        let f = membership_strengths(&g, &s);
        assert_eq!(f.weight(0, 1), 1.0);

        // One-sided edge of strength 0.5.
        let g = NeighborGraph::from_lists(1, vec![1, 2, 1], vec![1.0, 1.0, 1.0]).unwrap();
        let s = SmoothedKnn {
            rho: vec![1.0 - core::f64::consts::LN_2, 1.0, 1.0],
            sigma: vec![1.0, 1.0, 1.0],
        };
        let f = membership_strengths(&g, &s);
        assert!((f.weight(0, 1) - 0.5).abs() < 1e-12);
        assert_eq!(f.weight(0, 1), f.weight(1, 0));
        assert_eq!(f.weight(1, 2), 1.0);
    }

    #[test]
    fn from_edges_rejects_bad_weights() {
        assert!(FuzzyGraph::from_edges(2, [(0, 1, 1.5)]).is_none());
        assert!(FuzzyGraph::from_edges(2, [(0, 0, 0.5)]).is_none());
        let g = FuzzyGraph::from_edges(3, [(2, 0, 0.25), (0, 1, 0.0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 2, 0.25)]);
    }
}
