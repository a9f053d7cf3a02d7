//! JSON shapes of the cluster, assignment and representative files.

use serde::{Deserialize, Serialize};
use vitscope_core::{ClusterModel, KMeansConfig, Matrix};

use crate::store::PostRecord;

pub const CLUSTER_MODEL: &str = "cluster_model.json";
pub const ASSIGNMENTS: &str = "assignments.jsonl";
pub const REPRESENTATIVES: &str = "representatives.json";
pub const METRICS_TXT: &str = "metrics.txt";
pub const METRICS_JSON: &str = "metrics.json";
pub const SCATTER: &str = "scatter.svg";
pub const REPORT: &str = "report.md";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModelFile {
    pub k: usize,
    pub d: usize,
    /// Row-major `k x d`.
    pub centroids: Vec<f64>,
    pub inertia: f64,
    pub seed: u64,
    pub config: KMeansConfig,
    pub iterations: usize,
    pub sizes: Vec<usize>,
    pub cluster_inertia: Vec<f64>,
}

impl ClusterModelFile {
    pub fn new(model: &ClusterModel, x: &Matrix<f64>, config: &KMeansConfig) -> Self {
        Self {
            k: model.k(),
            d: model.centroids.cols(),
            centroids: model.centroids.as_slice().to_vec(),
            inertia: model.inertia,
            seed: config.seed,
            config: config.clone(),
            iterations: model.iterations,
            sizes: model.cluster_sizes(),
            cluster_inertia: model.cluster_inertia(x),
        }
    }

    pub fn centroid_matrix(&self) -> Option<Matrix<f64>> {
        Matrix::from_vec(self.k, self.d, self.centroids.clone()).ok()
    }
}

/// One line of the assignments file: the provenance record plus its cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    #[serde(flatten)]
    pub record: PostRecord,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeEntry {
    pub record_id: u64,
    pub row: usize,
    pub image_path: String,
    pub distance: f64,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRepresentatives {
    pub cluster: usize,
    pub size: usize,
    /// The `m` points nearest the centroid among all points.
    pub nearest: Vec<RepresentativeEntry>,
    /// The `min(m, size)` members nearest the centroid.
    pub members: Vec<RepresentativeEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentativesFile {
    pub m: usize,
    pub clusters: Vec<ClusterRepresentatives>,
}
