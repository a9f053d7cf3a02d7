//! k-means with k-means++ seeding and Lloyd iterations, and retrieval of the
//! points nearest to each centroid.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::matrix::{distance, squared_distance, Matrix};
use crate::rng::{seeded_rng, Rng};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ClusterError {
    #[error("need at least {needed} points, got {points}")]
    TooFewPoints { points: usize, needed: usize },
    #[error("invalid k-means configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("expected {expected} columns, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("{rows} data rows but {ids} record ids")]
    Alignment { rows: usize, ids: usize },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the relative inertia improvement falls below this.
    pub tol: f64,
    pub n_init: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 20,
            max_iter: 300,
            tol: 1e-4,
            n_init: 10,
            seed: 42,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<(), ClusterError> {
        let reason = if self.k == 0 {
            "k must be at least 1"
        } else if self.max_iter == 0 {
            "max_iter must be at least 1"
        } else if self.n_init == 0 {
            "n_init must be at least 1"
        } else if !(self.tol >= 0.0) {
            "tol must be non-negative"
        } else {
            return Ok(());
        };
        Err(ClusterError::InvalidConfig { reason })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    /// `k x d`.
    pub centroids: Matrix<f64>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances of points to their centroid.
    pub inertia: f64,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centroids.rows()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }

    /// Inertia contributed by each cluster.
    pub fn cluster_inertia(&self, x: &Matrix<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        for (i, &a) in self.assignments.iter().enumerate() {
            out[a] += squared_distance(x.row(i), self.centroids.row(a));
        }
        out
    }

    pub fn predict(&self, y: &Matrix<f64>) -> Result<Vec<usize>, ClusterError> {
        predict(&self.centroids, y)
    }
}

/// `(index, squared distance)` of the nearest centroid; ties go to the lower
/// index.
#[inline]
fn nearest(point: &[f64], centroids: &Matrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.rows() {
        let d = squared_distance(point, centroids.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Total squared distance of each point to its assigned centroid.
pub fn inertia(x: &Matrix<f64>, centroids: &Matrix<f64>, assignments: &[usize]) -> f64 {
    assignments
        .iter()
        .enumerate()
        .map(|(i, &a)| squared_distance(x.row(i), centroids.row(a)))
        .sum()
}

/// k-means++ seeding: the first centroid is uniform over the points, each
/// further one is drawn with probability proportional to its squared
/// distance to the nearest centroid chosen so far.
pub fn kmeans_pp_init(x: &Matrix<f64>, k: usize, rng: &mut Rng) -> Result<Matrix<f64>, ClusterError> {
    let n = x.rows();
    if k == 0 {
        return Err(ClusterError::InvalidConfig {
            reason: "k must be at least 1",
        });
    }
    if n < k {
        return Err(ClusterError::TooFewPoints { points: n, needed: k });
    }
    let mut centroids = Matrix::zeros(k, x.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(x.row(first));
    let mut closest: Vec<f64> = (0..n).map(|i| squared_distance(x.row(i), x.row(first))).collect();
    let mut chosen = vec![false; n];
    chosen[first] = true;

    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in closest.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                acc += w;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // Every remaining point coincides with a centroid: pick uniformly
            // among points not chosen yet.
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centroids.row_mut(c).copy_from_slice(x.row(pick));
        for (i, slot) in closest.iter_mut().enumerate() {
            let d = squared_distance(x.row(i), x.row(pick));
            if d < *slot {
                *slot = d;
            }
        }
    }
    Ok(centroids)
}

/// One result of [`lloyd_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct LloydStep {
    pub assignments: Vec<usize>,
    pub centroids: Matrix<f64>,
    pub inertia: f64,
}

/// Assigns every point to its nearest centroid and moves each centroid to
/// the mean of its points.
///
/// A centroid left without points is moved onto the point farthest from
/// its own centroid (taken from a cluster with at least two members), and
/// that point is reassigned to it. This keeps `k` clusters and never
/// increases the inertia.
pub fn lloyd_step(x: &Matrix<f64>, centroids: &Matrix<f64>) -> Result<LloydStep, ClusterError> {
    let (n, d) = x.shape();
    let k = centroids.rows();
    if centroids.cols() != d {
        return Err(ClusterError::Shape {
            expected: d,
            found: centroids.cols(),
        });
    }
    if n < k {
        return Err(ClusterError::TooFewPoints { points: n, needed: k });
    }
    let mut assignments: Vec<usize> = (0..n).map(|i| nearest(x.row(i), centroids).0).collect();
    let mut new_centroids = means(x, &assignments, k, centroids);

    loop {
        let mut sizes = vec![0usize; k];
        for &a in &assignments {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let mut donor = None;
        let mut far = -1.0;
        for (i, &a) in assignments.iter().enumerate() {
            if sizes[a] < 2 {
                continue;
            }
            let dist = squared_distance(x.row(i), new_centroids.row(a));
            if dist > far {
                far = dist;
                donor = Some(i);
            }
        }
        let point = donor.expect("n >= k leaves a cluster with two members");
        assignments[point] = empty;
        new_centroids = means(x, &assignments, k, &new_centroids);
    }

    let inertia = inertia(x, &new_centroids, &assignments);
    Ok(LloydStep {
        assignments,
        centroids: new_centroids,
        inertia,
    })
}

/// Per-cluster means; an empty cluster keeps its previous centroid.
fn means(x: &Matrix<f64>, assignments: &[usize], k: usize, previous: &Matrix<f64>) -> Matrix<f64> {
    let d = x.cols();
    let mut sums = Matrix::zeros(k, d);
    let mut counts = vec![0usize; k];
    for (i, &a) in assignments.iter().enumerate() {
        counts[a] += 1;
        for (s, v) in sums.row_mut(a).iter_mut().zip(x.row(i)) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] == 0 {
            sums.row_mut(c).copy_from_slice(previous.row(c));
        } else {
            let inv = counts[c] as f64;
            for s in sums.row_mut(c) {
                *s /= inv;
            }
        }
    }
    sums
}

/// Lloyd iterations from the given centroids until the relative inertia
/// improvement drops below `tol` or `max_iter` steps have run.
pub fn run_lloyd(x: &Matrix<f64>, init: Matrix<f64>, max_iter: usize, tol: f64) -> Result<ClusterModel, ClusterError> {
    let mut step = lloyd_step(x, &init)?;
    let mut iterations = 1;
    while iterations < max_iter {
        let next = lloyd_step(x, &step.centroids)?;
        iterations += 1;
        let prev = step.inertia;
        step = next;
        if prev <= 0.0 || (prev - step.inertia) / prev < tol {
            break;
        }
    }
    Ok(ClusterModel {
        centroids: step.centroids,
        assignments: step.assignments,
        inertia: step.inertia,
        iterations,
    })
}

/// Best of `n_init` seeded restarts by final inertia (earliest on ties).
pub fn fit(x: &Matrix<f64>, config: &KMeansConfig) -> Result<ClusterModel, ClusterError> {
    config.validate()?;
    if x.rows() < config.k {
        return Err(ClusterError::TooFewPoints {
            points: x.rows(),
            needed: config.k,
        });
    }
    let mut best: Option<ClusterModel> = None;
    for restart in 0..config.n_init {
        let mut rng = seeded_rng(config.seed, restart as u64);
        let init = kmeans_pp_init(x, config.k, &mut rng)?;
        let model = run_lloyd(x, init, config.max_iter, config.tol)?;
        if best.as_ref().is_none_or(|b| model.inertia < b.inertia) {
            best = Some(model);
        }
    }
    Ok(best.expect("n_init >= 1"))
}

/// Nearest-centroid label per row of `y`; ties go to the lower index.
pub fn predict(centroids: &Matrix<f64>, y: &Matrix<f64>) -> Result<Vec<usize>, ClusterError> {
    if y.cols() != centroids.cols() && !y.is_empty() {
        return Err(ClusterError::Shape {
            expected: centroids.cols(),
            found: y.cols(),
        });
    }
    Ok(y.iter_rows().map(|row| nearest(row, centroids).0).collect())
}

/// One retrieved point.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Neighbor {
    pub record_id: u64,
    pub row: usize,
    pub distance: f64,
}

/// Per centroid, the `m` nearest points by Euclidean distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Representatives {
    pub per_cluster: Vec<Vec<Neighbor>>,
}

/// For each centroid, the `m` nearest rows of `x` among all rows (not only
/// the cluster's members), nearest first, ties broken by lower record id.
pub fn representatives(
    x: &Matrix<f64>,
    record_ids: &[u64],
    centroids: &Matrix<f64>,
    m: usize,
) -> Result<Representatives, ClusterError> {
    if record_ids.len() != x.rows() {
        return Err(ClusterError::Alignment {
            rows: x.rows(),
            ids: record_ids.len(),
        });
    }
    if x.cols() != centroids.cols() && !x.is_empty() {
        return Err(ClusterError::Shape {
            expected: centroids.cols(),
            found: x.cols(),
        });
    }
    let per_cluster = centroids
        .iter_rows()
        .map(|centroid| {
            let mut all: Vec<Neighbor> = x
                .iter_rows()
                .enumerate()
                .map(|(row, p)| Neighbor {
                    record_id: record_ids[row],
                    row,
                    distance: distance(p, centroid),
                })
                .collect();
            all.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.record_id.cmp(&b.record_id)));
            all.truncate(m);
            all
        })
        .collect();
    Ok(Representatives { per_cluster })
}
