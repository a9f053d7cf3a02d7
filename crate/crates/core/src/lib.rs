//! Numerical core of the vitscope pipeline.
//!
//! Everything in this crate is pure computation over in-memory buffers: the
//! ViT-Base forward pass, UMAP (kNN graph, fuzzy simplicial set, SGD layout),
//! k-means with k-means++ seeding, and the Silhouette / Calinski-Harabasz /
//! Davies-Bouldin validity indices. It builds without `std` (only `alloc` is
//! required); file formats, image decoding and the command line live in the
//! `vitscope` crate.
//!
//! Enable the `parallel` feature to spread the kNN search and silhouette
//! computation across a rayon pool. Results are identical either way.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod clustering;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod reduction;
pub mod vit;

mod rng;

pub use clustering::{ClusterError, ClusterModel, KMeansConfig, Representatives};
pub use matrix::{Matrix, ShapeMismatch};
pub use metrics::{MetricError, MetricsRow};
pub use reduction::{FuzzyGraph, LayoutConfig, NeighborGraph, Projection, ReductionError};
pub use rng::seeded_rng;
pub use vit::{Embedding, ImageTensor, ModelConfig, ModelWeights, TokenSequence, VitError};
