//! Stochastic gradient layout of a fuzzy graph.
//!
//! Edges are sampled in proportion to their membership weight; each sample
//! pulls the two endpoints together and is followed by `negative_samples`
//! random pushes away from other points. Both moves follow the exact
//! gradients of the cross-entropy terms below, with each coordinate of a
//! step clipped to `[-CLIP, CLIP]`.
//!
//! - attraction: `-log phi(x, y)`, `phi = 1 / (1 + a |x-y|^(2b))`
//! - repulsion: `-log(1 - phi(x, y))`

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{curve, FuzzyGraph, Projection, ReductionError};
use crate::linalg::{orthonormalize_columns, symmetric_eigen};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::{seeded_rng, Rng};

const CLIP: f64 = 4.0;
const SPECTRAL_ITERATIONS: usize = 200;
const SPECTRAL_EXTENT: f64 = 10.0;
const RANDOM_INIT_SCALE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayoutConfig {
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub target_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_samples: usize,
    /// Curve parameters; fitted from `min_dist` and `spread` when absent.
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub seed: u64,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        Self {
            n_neighbors: 15,
            min_dist: 0.1,
            spread: 1.0,
            target_dim: 2,
            epochs: 200,
            learning_rate: 1.0,
            negative_samples: 5,
            a: None,
            b: None,
            seed: 42,
        }
    }
}

impl LayoutConfig {
    pub fn validate(&self) -> Result<(), ReductionError> {
        let reason = if self.n_neighbors < 2 {
            "n_neighbors must be at least 2"
        } else if self.target_dim == 0 {
            "target_dim must be at least 1"
        } else if self.epochs == 0 {
            "epochs must be at least 1"
        } else if !(self.learning_rate > 0.0) {
            "learning_rate must be positive"
        } else if !(self.min_dist > 0.0 && self.min_dist < self.spread) {
            "require 0 < min_dist < spread"
        } else {
            return Ok(());
        };
        Err(ReductionError::InvalidConfig { reason })
    }

    /// The curve parameters, fitting them if they were not given.
    pub fn curve_params(&self) -> Result<(f64, f64), ReductionError> {
        match (self.a, self.b) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => curve::fit_ab(self.min_dist, self.spread),
        }
    }
}

/// `d(-log phi) / d|x-y|^2`, times 2: the attraction gradient on `x` is
/// this coefficient times `(x - y)`.
#[inline]
pub fn attractive_coefficient(dist_sq: f64, a: f64, b: f64) -> f64 {
    if dist_sq <= 0.0 {
        return 0.0;
    }
    let s = libm::pow(dist_sq, b);
    2.0 * a * b * libm::pow(dist_sq, b - 1.0) / (1.0 + a * s)
}

/// Repulsion counterpart of [`attractive_coefficient`]; negative, so the
/// gradient step pushes `x` away from `y`.
#[inline]
pub fn repulsive_coefficient(dist_sq: f64, a: f64, b: f64) -> f64 {
    if dist_sq <= 0.0 {
        return 0.0;
    }
    let s = libm::pow(dist_sq, b);
    -2.0 * b / (dist_sq * (1.0 + a * s))
}

pub fn attractive_loss(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    libm::log1p(a * libm::pow(squared_distance(x, y), b))
}

pub fn repulsive_loss(x: &[f64], y: &[f64], a: f64, b: f64) -> f64 {
    let s = a * libm::pow(squared_distance(x, y), b);
    libm::log1p(s) - libm::log(s)
}

/// Gradient of [`attractive_loss`] with respect to `x`.
pub fn attractive_gradient(x: &[f64], y: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = attractive_coefficient(squared_distance(x, y), a, b);
    x.iter().zip(y).map(|(xi, yi)| c * (xi - yi)).collect()
}

/// Gradient of [`repulsive_loss`] with respect to `x`.
pub fn repulsive_gradient(x: &[f64], y: &[f64], a: f64, b: f64) -> Vec<f64> {
    let c = repulsive_coefficient(squared_distance(x, y), a, b);
    x.iter().zip(y).map(|(xi, yi)| c * (xi - yi)).collect()
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(-CLIP, CLIP)
}

fn random_init(n: usize, dim: usize, rng: &mut Rng) -> Matrix<f64> {
    let data = (0..n * dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            RANDOM_INIT_SCALE * z
        })
        .collect();
    Matrix::from_vec(n, dim, data).expect("shape")
}

/// Leading non-trivial eigenvectors of the normalized adjacency
/// `D^-1/2 W D^-1/2` (equivalently the bottom of the normalized Laplacian),
/// via orthogonal subspace iteration followed by a Rayleigh-Ritz rotation.
/// Returns `None` when the graph is too small or degenerate for `dim`
/// components.
pub fn spectral_init(graph: &FuzzyGraph, dim: usize, rng: &mut Rng) -> Option<Matrix<f64>> {
    let n = graph.num_points();
    if n < dim + 2 || graph.edges().is_empty() {
        return None;
    }
    let degrees = graph.degrees();
    if degrees.iter().any(|&d| d <= 0.0) {
        return None;
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let total: f64 = degrees.iter().sum();
    let trivial: Vec<f64> = degrees.iter().map(|&d| libm::sqrt(d / total)).collect();

    // (I + A) / 2 has the spectrum of A shifted into [0, 1].
    let apply = |v: &Matrix<f64>| -> Matrix<f64> {
        let mut out = v.map(|x| 0.5 * x);
        for &(i, j, w) in graph.edges() {
            let s = 0.5 * w * inv_sqrt[i] * inv_sqrt[j];
            for c in 0..dim {
                let vi = v.get(i, c);
                let vj = v.get(j, c);
                out.set(i, c, out.get(i, c) + s * vj);
                out.set(j, c, out.get(j, c) + s * vi);
            }
        }
        out
    };
    let deflate = |v: &mut Matrix<f64>| {
        for c in 0..dim {
            let dot: f64 = (0..n).map(|i| v.get(i, c) * trivial[i]).sum();
            for i in 0..n {
                v.set(i, c, v.get(i, c) - dot * trivial[i]);
            }
        }
    };

    let mut basis = random_init(n, dim, rng);
    deflate(&mut basis);
    if orthonormalize_columns(&mut basis) < dim {
        return None;
    }
    for _ in 0..SPECTRAL_ITERATIONS {
        basis = apply(&basis);
        deflate(&mut basis);
        if orthonormalize_columns(&mut basis) < dim {
            return None;
        }
    }

    let projected = apply(&basis);
    let mut ritz = Matrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            ritz.set(r, c, (0..n).map(|i| basis.get(i, r) * projected.get(i, c)).sum());
        }
    }
    let eig = symmetric_eigen(&ritz);
    let mut coords = Matrix::zeros(n, dim);
    for i in 0..n {
        for c in 0..dim {
            let v: f64 = (0..dim).map(|r| basis.get(i, r) * eig.vectors.get(r, c)).sum();
            coords.set(i, c, v);
        }
    }
    let max_abs = coords.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(max_abs > 0.0) || !coords.is_finite() {
        return None;
    }
    let expansion = SPECTRAL_EXTENT / max_abs;
    for v in coords.as_mut_slice() {
        let z: f64 = StandardNormal.sample(rng);
        *v = *v * expansion + 1e-4 * z;
    }
    Some(coords)
}

/// Lays out `graph` in `config.target_dim` dimensions.
///
/// The schedule is sequential and every random draw comes from a generator
/// seeded by `config.seed`, so identical inputs give bitwise-identical
/// output.
pub fn optimize_layout(graph: &FuzzyGraph, config: &LayoutConfig) -> Result<Projection, ReductionError> {
    config.validate()?;
    let n = graph.num_points();
    if n == 0 {
        return Err(ReductionError::TooFewPoints { points: 0, needed: 1 });
    }
    let (a, b) = config.curve_params()?;
    let dim = config.target_dim;
    let mut init_rng = seeded_rng(config.seed, 1);
    let embedding =
        spectral_init(graph, dim, &mut init_rng).unwrap_or_else(|| random_init(n, dim, &mut init_rng));
    optimize_from(graph, embedding, a, b, config)
}

/// SGD from a given starting layout.
pub fn optimize_from(
    graph: &FuzzyGraph,
    mut embedding: Matrix<f64>,
    a: f64,
    b: f64,
    config: &LayoutConfig,
) -> Result<Projection, ReductionError> {
    let n = graph.num_points();
    let dim = config.target_dim;
    if embedding.shape() != (n, dim) {
        return Err(ReductionError::Shape {
            expected: (n, dim),
            found: embedding.shape(),
        });
    }
    let epochs = config.epochs;
    let mut rng = seeded_rng(config.seed, 2);

    let max_w = graph.edges().iter().fold(0.0f64, |m, e| m.max(e.2));
    // Both directions of every edge that is sampled at least once.
    let mut heads = Vec::new();
    let mut tails = Vec::new();
    let mut epochs_per_sample = Vec::new();
    for &(i, j, w) in graph.edges() {
        if w < max_w / epochs as f64 {
            continue;
        }
        for (h, t) in [(i, j), (j, i)] {
            heads.push(h);
            tails.push(t);
            epochs_per_sample.push(max_w / w);
        }
    }
    let neg_rate = config.negative_samples as f64;
    let epochs_per_negative: Vec<f64> = epochs_per_sample.iter().map(|e| e / neg_rate.max(1.0)).collect();
    let mut next_sample = epochs_per_sample.clone();
    let mut next_negative = epochs_per_negative.clone();

    let mut delta = vec![0.0; dim];
    for epoch in 0..epochs {
        let alpha = config.learning_rate * (1.0 - epoch as f64 / epochs as f64);
        let now = epoch as f64;
        for e in 0..heads.len() {
            if next_sample[e] > now {
                continue;
            }
            let (j, k) = (heads[e], tails[e]);
            let c = attractive_coefficient(squared_distance(embedding.row(j), embedding.row(k)), a, b);
            for d in 0..dim {
                delta[d] = clip(c * (embedding.get(j, d) - embedding.get(k, d)));
            }
            for d in 0..dim {
                embedding.set(j, d, embedding.get(j, d) - alpha * delta[d]);
                embedding.set(k, d, embedding.get(k, d) + alpha * delta[d]);
            }
            next_sample[e] += epochs_per_sample[e];

            if config.negative_samples > 0 {
                let draws = ((now - next_negative[e]) / epochs_per_negative[e]).max(0.0) as usize;
                for _ in 0..draws {
                    let other = rng.random_range(0..n);
                    if other == j {
                        continue;
                    }
                    let c = repulsive_coefficient(squared_distance(embedding.row(j), embedding.row(other)), a, b);
                    if c == 0.0 {
                        continue;
                    }
                    for d in 0..dim {
                        let step = clip(c * (embedding.get(j, d) - embedding.get(other, d)));
                        embedding.set(j, d, embedding.get(j, d) - alpha * step);
                    }
                }
                next_negative[e] += draws as f64 * epochs_per_negative[e];
            }
        }
    }
    if !embedding.is_finite() {
        return Err(ReductionError::NonFinite);
    }
    Ok(Projection(embedding))
}
