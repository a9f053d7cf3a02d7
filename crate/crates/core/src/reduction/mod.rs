//! UMAP dimensionality reduction, plus PCA as a deterministic baseline.
//!
//! The pipeline is [`knn_graph`] → [`smooth_knn`] → [`membership_strengths`]
//! → [`optimize_layout`]; [`umap`] runs all four. Neighbor lists exclude the
//! point itself, so `n_neighbors` counts other points.

mod curve;
mod fuzzy;
mod knn;
mod layout;
mod pca;

pub use curve::{curve, fit_ab};
pub use fuzzy::{
    calibrate_sigma, membership_strengths, membership_sum, smooth_knn, FuzzyGraph, SmoothedKnn, SIGMA_MAX, SIGMA_MIN,
};
pub use knn::{knn_graph, NeighborGraph};
pub use layout::{
    attractive_coefficient, attractive_gradient, attractive_loss, optimize_from, optimize_layout,
    repulsive_coefficient, repulsive_gradient, repulsive_loss, spectral_init, LayoutConfig,
};
pub use pca::{pca, PcaModel};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReductionError {
    #[error("need at least {needed} points, got {points}")]
    TooFewPoints { points: usize, needed: usize },
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("invalid layout configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("invalid neighbor graph: {reason}")]
    InvalidGraph { reason: &'static str },
    #[error("curve fit failed: {reason}")]
    Fit { reason: &'static str },
    #[error("shape mismatch: expected {expected:?}, found {found:?}")]
    Shape {
        expected: (usize, usize),
        found: (usize, usize),
    },
}

/// Low-dimensional coordinates; row `i` belongs to input row `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection(pub Matrix<f64>);

impl Projection {
    pub fn dim(&self) -> usize {
        self.0.cols()
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Matrix<f64> {
        self.0
    }
}

/// Fuzzy graph of `x` under `config.n_neighbors`.
pub fn fuzzy_graph(x: &Matrix<f64>, config: &LayoutConfig) -> Result<FuzzyGraph, ReductionError> {
    config.validate()?;
    let graph = knn_graph(x, config.n_neighbors)?;
    let smoothed = smooth_knn(&graph);
    Ok(membership_strengths(&graph, &smoothed))
}

/// Full UMAP of the rows of `x` into `config.target_dim` dimensions.
/// The target dimension must be smaller than the source dimension.
pub fn umap(x: &Matrix<f64>, config: &LayoutConfig) -> Result<Projection, ReductionError> {
    if config.target_dim >= x.cols() {
        return Err(ReductionError::InvalidConfig {
            reason: "target_dim must be smaller than the source dimension",
        });
    }
    let graph = fuzzy_graph(x, config)?;
    optimize_layout(&graph, config)
}
