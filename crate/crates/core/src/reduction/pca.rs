use alloc::vec::Vec;

use super::{Projection, ReductionError};
use crate::linalg::symmetric_eigen;
use crate::matrix::Matrix;

/// Principal axes fitted by [`pca`].
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `d x D`, one unit-norm principal axis per row.
    pub components: Matrix<f64>,
    /// Variance captured by each component, descending.
    pub variances: Vec<f64>,
}

impl PcaModel {
    pub fn transform(&self, x: &Matrix<f64>) -> Projection {
        let d = self.components.rows();
        let mut out = Matrix::zeros(x.rows(), d);
        for i in 0..x.rows() {
            let row = x.row(i);
            for c in 0..d {
                let v: f64 = row
                    .iter()
                    .zip(&self.mean)
                    .zip(self.components.row(c))
                    .map(|((x, m), p)| (x - m) * p)
                    .sum();
                out.set(i, c, v);
            }
        }
        Projection(out)
    }
}

/// Fixes the sign so the largest-magnitude entry (first on ties) is positive.
fn fix_sign(axis: &mut [f64]) {
    let mut best = 0;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        for v in axis.iter_mut() {
            *v = -*v;
        }
    }
}

/// Top-`d` principal component projection of the centered data.
///
/// Eigendecomposes the `D x D` covariance, or the `n x n` Gram matrix when
/// there are fewer points than dimensions.
pub fn pca(x: &Matrix<f64>, d: usize) -> Result<(Projection, PcaModel), ReductionError> {
    let (n, dim) = x.shape();
    if d == 0 || d > n.min(dim) {
        return Err(ReductionError::Shape {
            expected: (n.min(dim), n.min(dim)),
            found: (n, d),
        });
    }
    let mut mean = alloc::vec![0.0; dim];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let denom = (n.max(2) - 1) as f64;

    let mut components = Matrix::zeros(d, dim);
    let mut variances = Vec::with_capacity(d);
    if dim <= n {
        let mut cov = Matrix::zeros(dim, dim);
        for row in centered.iter_rows() {
            for a in 0..dim {
                if row[a] == 0.0 {
                    continue;
                }
                for b in a..dim {
                    cov.set(a, b, cov.get(a, b) + row[a] * row[b]);
                }
            }
        }
        for a in 0..dim {
            for b in a..dim {
                let v = cov.get(a, b) / denom;
                cov.set(a, b, v);
                cov.set(b, a, v);
            }
        }
        let eig = symmetric_eigen(&cov);
        for c in 0..d {
            let axis = components.row_mut(c);
            for (k, a) in axis.iter_mut().enumerate() {
                *a = eig.vectors.get(k, c);
            }
            fix_sign(axis);
            variances.push(eig.values[c].max(0.0));
        }
    } else {
        let mut gram = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = centered.row(i).iter().zip(centered.row(j)).map(|(a, b)| a * b).sum();
                gram.set(i, j, v);
                gram.set(j, i, v);
            }
        }
        let eig = symmetric_eigen(&gram);
        for c in 0..d {
            // axis = X^T u / |X^T u|
            let axis = components.row_mut(c);
            for (i, row) in centered.iter_rows().enumerate() {
                let u = eig.vectors.get(i, c);
                for (a, v) in axis.iter_mut().zip(row) {
                    *a += u * v;
                }
            }
            let norm = libm::sqrt(axis.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                for a in axis.iter_mut() {
                    *a /= norm;
                }
            }
            fix_sign(axis);
            variances.push(eig.values[c].max(0.0) / denom);
        }
    }
    let model = PcaModel {
        mean,
        components,
        variances,
    };
    Ok((model.transform(x), model))
}
