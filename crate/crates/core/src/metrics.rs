//! Cluster validity indices and the per-dimension report table.
//!
//! Labels may be arbitrary integers; only equality matters. All sums are
//! carried in `f64`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::seq::index;

use crate::matrix::{distance, squared_distance, Matrix};
use crate::rng::seeded_rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("need at least {needed} clusters, found {found}")]
    TooFewClusters { found: usize, needed: usize },
    #[error("need at least {needed} points, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("every point is its own cluster ({clusters} clusters for {points} points)")]
    AllSingletons { clusters: usize, points: usize },
    #[error("{rows} data rows but {labels} labels")]
    Alignment { rows: usize, labels: usize },
    #[error("clusters {first} and {second} have coincident centroids")]
    CoincidentCentroids { first: usize, second: usize },
    #[error("input contains non-finite values")]
    NonFinite,
}

/// Dense cluster indices `0..k` in ascending order of the original label.
struct Partition {
    original: Vec<usize>,
    of_point: Vec<usize>,
    sizes: Vec<usize>,
}

impl Partition {
    fn new(x: &Matrix<f64>, labels: &[usize]) -> Result<Self, MetricError> {
        if labels.len() != x.rows() {
            return Err(MetricError::Alignment {
                rows: x.rows(),
                labels: labels.len(),
            });
        }
        if !x.is_finite() {
            return Err(MetricError::NonFinite);
        }
        let mut dense = BTreeMap::new();
        for &l in labels {
            let next = dense.len();
            dense.entry(l).or_insert(next);
        }
        // Re-number in label order so results do not depend on point order.
        let original: Vec<usize> = dense.keys().copied().collect();
        let rank: BTreeMap<usize, usize> = original.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        let of_point: Vec<usize> = labels.iter().map(|l| rank[l]).collect();
        let mut sizes = vec![0; original.len()];
        for &c in &of_point {
            sizes[c] += 1;
        }
        Ok(Self {
            original,
            of_point,
            sizes,
        })
    }

    fn k(&self) -> usize {
        self.sizes.len()
    }

    fn require_clusters(&self, needed: usize) -> Result<(), MetricError> {
        if self.k() < needed {
            return Err(MetricError::TooFewClusters {
                found: self.k(),
                needed,
            });
        }
        Ok(())
    }

    fn centroids(&self, x: &Matrix<f64>) -> Matrix<f64> {
        let mut c = Matrix::zeros(self.k(), x.cols());
        for (i, &a) in self.of_point.iter().enumerate() {
            for (s, v) in c.row_mut(a).iter_mut().zip(x.row(i)) {
                *s += v;
            }
        }
        for a in 0..self.k() {
            let n = self.sizes[a] as f64;
            for s in c.row_mut(a) {
                *s /= n;
            }
        }
        c
    }
}

/// Silhouette coefficient of every point. Points in singleton clusters
/// score 0.
pub fn silhouette_samples(x: &Matrix<f64>, labels: &[usize]) -> Result<Vec<f64>, MetricError> {
    let part = Partition::new(x, labels)?;
    part.require_clusters(2)?;
    if x.rows() < 3 {
        return Err(MetricError::TooFewPoints {
            found: x.rows(),
            needed: 3,
        });
    }
    let k = part.k();
    let score = |i: usize| -> f64 {
        let own = part.of_point[i];
        if part.sizes[own] == 1 {
            return 0.0;
        }
        let mut sums = vec![0.0; k];
        let row = x.row(i);
        for j in 0..x.rows() {
            if j != i {
                sums[part.of_point[j]] += distance(row, x.row(j));
            }
        }
        let a = sums[own] / (part.sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / part.sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom == 0.0 {
            0.0
        } else {
            (b - a) / denom
        }
    };
    #[cfg(feature = "parallel")]
    let out = {
        use rayon::prelude::*;
        (0..x.rows()).into_par_iter().map(score).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out = (0..x.rows()).map(score).collect();
    Ok(out)
}

/// Mean silhouette coefficient.
pub fn silhouette(x: &Matrix<f64>, labels: &[usize]) -> Result<f64, MetricError> {
    let samples = silhouette_samples(x, labels)?;
    Ok(samples.iter().sum::<f64>() / samples.len() as f64)
}

/// How the silhouette in a report was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "mode", rename_all = "snake_case"))]
pub enum SilhouetteMode {
    /// All `O(n^2)` pairwise distances.
    Exact,
    /// Mean silhouette of a seeded uniform subsample of `size` points,
    /// computed within the subsample.
    Subsampled { size: usize, seed: u64 },
}

pub fn silhouette_with_mode(x: &Matrix<f64>, labels: &[usize], mode: SilhouetteMode) -> Result<f64, MetricError> {
    match mode {
        SilhouetteMode::Exact => silhouette(x, labels),
        SilhouetteMode::Subsampled { size, seed } if size < x.rows() => {
            if labels.len() != x.rows() {
                return Err(MetricError::Alignment {
                    rows: x.rows(),
                    labels: labels.len(),
                });
            }
            let mut rng = seeded_rng(seed, 0);
            let mut rows = index::sample(&mut rng, x.rows(), size).into_vec();
            rows.sort_unstable();
            let sub = Matrix::from_rows(x.cols(), rows.iter().map(|&r| x.row(r))).expect("uniform rows");
            let sub_labels: Vec<usize> = rows.iter().map(|&r| labels[r]).collect();
            silhouette(&sub, &sub_labels)
        }
        SilhouetteMode::Subsampled { .. } => silhouette(x, labels),
    }
}

/// `[B / (k - 1)] / [W / (n - k)]`, between- over within-cluster dispersion.
/// Returns `+inf` when every cluster is a set of identical points (`W = 0`).
pub fn calinski_harabasz(x: &Matrix<f64>, labels: &[usize]) -> Result<f64, MetricError> {
    let part = Partition::new(x, labels)?;
    part.require_clusters(2)?;
    let (n, k) = (x.rows(), part.k());
    if k >= n {
        return Err(MetricError::AllSingletons { clusters: k, points: n });
    }
    let centroids = part.centroids(x);
    let mut mean = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let between: f64 = (0..k)
        .map(|c| part.sizes[c] as f64 * squared_distance(centroids.row(c), &mean))
        .sum();
    let within: f64 = part
        .of_point
        .iter()
        .enumerate()
        .map(|(i, &c)| squared_distance(x.row(i), centroids.row(c)))
        .sum();
    if within == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1) as f64) / (within / (n - k) as f64))
}

/// Mean over clusters of the worst `(s_i + s_j) / |mu_i - mu_j|`, where
/// `s_i` is the mean distance of cluster `i`'s points to its centroid.
pub fn davies_bouldin(x: &Matrix<f64>, labels: &[usize]) -> Result<f64, MetricError> {
    let part = Partition::new(x, labels)?;
    part.require_clusters(2)?;
    let k = part.k();
    let centroids = part.centroids(x);
    let mut scatter = vec![0.0; k];
    for (i, &c) in part.of_point.iter().enumerate() {
        scatter[c] += distance(x.row(i), centroids.row(c));
    }
    for c in 0..k {
        scatter[c] /= part.sizes[c] as f64;
    }
    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in 0..k {
            if i == j {
                continue;
            }
            let sep = distance(centroids.row(i), centroids.row(j));
            if sep == 0.0 {
                return Err(MetricError::CoincidentCentroids {
                    first: part.original[i.min(j)],
                    second: part.original[i.max(j)],
                });
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// One line of the dimension sweep report.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsRow {
    pub dim: usize,
    pub silhouette: f64,
    pub calinski_harabasz: f64,
    pub davies_bouldin: f64,
}

impl MetricsRow {
    pub fn compute(dim: usize, x: &Matrix<f64>, labels: &[usize], mode: SilhouetteMode) -> Result<Self, MetricError> {
        Ok(Self {
            dim,
            silhouette: silhouette_with_mode(x, labels, mode)?,
            calinski_harabasz: calinski_harabasz(x, labels)?,
            davies_bouldin: davies_bouldin(x, labels)?,
        })
    }
}

/// A row of the table, or the reason it could not be computed.
pub type RowResult<E = MetricError> = (usize, Result<MetricsRow, E>);

/// All three indices for each `(dim, projection, labels)` entry, sorted by
/// dimension. A failing entry is reported in place without affecting the
/// others.
pub fn metrics_table<'a>(
    entries: impl IntoIterator<Item = (usize, &'a Matrix<f64>, &'a [usize])>,
    mode: SilhouetteMode,
) -> Vec<RowResult> {
    let mut rows: Vec<RowResult> = entries
        .into_iter()
        .map(|(dim, x, labels)| (dim, MetricsRow::compute(dim, x, labels, mode)))
        .collect();
    rows.sort_by_key(|r| r.0);
    rows
}

const DIM_WIDTH: usize = 6;
const SILHOUETTE_WIDTH: usize = 12;
const CH_WIDTH: usize = 10;
const DB_WIDTH: usize = 9;

/// Silhouette in the report style: four decimals without a leading zero.
pub fn format_silhouette(v: f64) -> String {
    let s = format!("{v:.4}");
    if let Some(rest) = s.strip_prefix("0.") {
        format!(".{rest}")
    } else if let Some(rest) = s.strip_prefix("-0.") {
        format!("-.{rest}")
    } else {
        s
    }
}

fn format_fixed(v: f64, decimals: usize) -> String {
    if v.is_infinite() {
        String::from(if v > 0.0 { "inf" } else { "-inf" })
    } else {
        format!("{v:.decimals$}")
    }
}

/// Index of the row with the highest silhouette (first on ties).
pub fn best_silhouette<E>(rows: &[RowResult<E>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, r)) in rows.iter().enumerate() {
        if let Ok(row) = r {
            if best.is_none_or(|(_, s)| row.silhouette > s) {
                best = Some((i, row.silhouette));
            }
        }
    }
    best.map(|b| b.0)
}

/// Fixed-width plain-text table with columns `Dim.`, `Silhouette`, `C-H`
/// and `D-B`. The row with the best silhouette is marked with `*` and a
/// trailing legend line.
pub fn format_table<E: core::fmt::Display>(rows: &[RowResult<E>]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>DIM_WIDTH$}{:>SILHOUETTE_WIDTH$}{:>CH_WIDTH$}{:>DB_WIDTH$}",
        "Dim.", "Silhouette", "C-H", "D-B"
    );
    let best = best_silhouette(rows);
    for (i, (dim, row)) in rows.iter().enumerate() {
        match row {
            Ok(r) => {
                let _ = write!(
                    out,
                    "{:>DIM_WIDTH$}{:>SILHOUETTE_WIDTH$}{:>CH_WIDTH$}{:>DB_WIDTH$}",
                    dim,
                    format_silhouette(r.silhouette),
                    format_fixed(r.calinski_harabasz, 1),
                    format_fixed(r.davies_bouldin, 3),
                );
                if best == Some(i) {
                    out.push_str("  *");
                }
                out.push('\n');
            }
            Err(e) => {
                let _ = writeln!(out, "{dim:>DIM_WIDTH$}  error: {e}");
            }
        }
    }
    if best.is_some() {
        out.push_str("* best silhouette\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture() -> (Matrix<f64>, Vec<usize>) {
        (
            Matrix::from_vec(4, 1, vec![0.0, 1.0, 10.0, 11.0]).unwrap(),
            vec![0, 0, 1, 1],
        )
    }

    #[test]
    fn hand_computed_fixture() {
        let (x, labels) = fixture();
        let s = silhouette_samples(&x, &labels).unwrap();
        // point 0: a = 1, b = (10 + 11) / 2 = 10.5, s = 9.5 / 10.5
        // point 1: a = 1, b = (9 + 10) / 2 = 9.5,   s = 8.5 / 9.5
        let expect = [9.5 / 10.5, 8.5 / 9.5, 8.5 / 9.5, 9.5 / 10.5];
        for (got, want) in s.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!((silhouette(&x, &labels).unwrap() - 0.8997).abs() < 1e-4);
        assert!((calinski_harabasz(&x, &labels).unwrap() - 200.0).abs() < 1e-9 * 200.0);
        assert!((davies_bouldin(&x, &labels).unwrap() - 0.1).abs() < 1e-9 * 0.1);
    }

    #[test]
    fn degenerate_clusterings() {
        let x = Matrix::from_vec(4, 1, vec![1.0, 1.0, 5.0, 5.0]).unwrap();
        let labels = [3, 3, 8, 8];
        assert_eq!(silhouette(&x, &labels).unwrap(), 1.0);
        assert_eq!(calinski_harabasz(&x, &labels).unwrap(), f64::INFINITY);
        assert_eq!(davies_bouldin(&x, &labels).unwrap(), 0.0);

        let (x, _) = fixture();
        assert_eq!(silhouette(&x, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert!(matches!(calinski_harabasz(&x, &[0, 1, 2, 3]), Err(MetricError::AllSingletons { .. })));
        assert!(matches!(silhouette(&x, &[0, 0, 0, 0]), Err(MetricError::TooFewClusters { .. })));
        assert!(matches!(calinski_harabasz(&x, &[1; 4]), Err(MetricError::TooFewClusters { .. })));
    }

    #[test]
    fn coincident_centroids_name_the_pair() {
        let x = Matrix::from_vec(4, 1, vec![-1.0, 1.0, -2.0, 2.0]).unwrap();
        assert_eq!(
            davies_bouldin(&x, &[4, 4, 7, 7]),
            Err(MetricError::CoincidentCentroids { first: 4, second: 7 })
        );
    }

    #[test]
    fn scaling_leaves_ch_unchanged() {
        let (x, labels) = fixture();
        let doubled = x.map(|v| 2.0 * v);
        let a = calinski_harabasz(&x, &labels).unwrap();
        let b = calinski_harabasz(&doubled, &labels).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
    }

    #[test]
    fn subsampled_mode_is_seeded() {
        let x = Matrix::from_vec(8, 1, vec![0.0, 0.5, 1.0, 1.5, 10.0, 10.5, 11.0, 11.5]).unwrap();
        let labels = [0, 0, 0, 0, 1, 1, 1, 1];
        let mode = SilhouetteMode::Subsampled { size: 6, seed: 3 };
        let a = silhouette_with_mode(&x, &labels, mode).unwrap();
        assert_eq!(a, silhouette_with_mode(&x, &labels, mode).unwrap());
        assert!(a > 0.8);
        let full = SilhouetteMode::Subsampled { size: 100, seed: 3 };
        assert_eq!(silhouette_with_mode(&x, &labels, full).unwrap(), silhouette(&x, &labels).unwrap());
    }

    #[test]
    fn silhouette_formatting() {
        assert_eq!(format_silhouette(0.0126), ".0126");
        assert_eq!(format_silhouette(-0.25), "-.2500");
        assert_eq!(format_silhouette(1.0), "1.0000");
    }

    #[test]
    fn table_reports_errors_inline() {
        let (x, labels) = fixture();
        let bad = [0usize; 4];
        let rows = metrics_table([(32, &x, &labels[..]), (16, &x, &bad[..])], SilhouetteMode::Exact);
        assert_eq!(rows[0].0, 16);
        assert!(rows[0].1.is_err());
        let text = format_table(&rows);
        assert!(text.contains("    16  error: need at least 2 clusters"));
        assert!(text.lines().nth(2).unwrap().ends_with('*'));
    }
}
