//! Small dense linear algebra: symmetric eigendecomposition and
//! orthonormalization. Sized for covariance matrices and Rayleigh-Ritz
//! projections, not for large sparse problems.

use alloc::vec::Vec;

use crate::matrix::Matrix;

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
/// `vectors` holds one eigenvector per column.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix<f64>,
}

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigendecomposition. Only the upper triangle of `a` is
/// trusted; the matrix is symmetrized first.
pub fn symmetric_eigen(a: &Matrix<f64>) -> SymmetricEigen {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = a.get(i, j);
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    let mut v = Matrix::identity(n);

    let scale: f64 = m.as_slice().iter().map(|x| x * x).sum::<f64>();
    let threshold = scale * 1e-30;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m.get(i, j) * m.get(i, j);
            }
        }
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, c * mkp - s * mkq);
                    m.set(k, q, s * mkp + c * mkq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, c * mpk - s * mqk);
                    m.set(q, k, s * mpk + c * mqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(j, j).total_cmp(&m.get(i, i)).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m.get(i, i)).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors.set(k, dst, v.get(k, src));
        }
    }
    SymmetricEigen { values, vectors }
}

/// Modified Gram-Schmidt over the columns of `m`, in place. Columns that
/// collapse to (numerically) zero are left as zero; the return value is the
/// number of columns that survived.
pub fn orthonormalize_columns(m: &mut Matrix<f64>) -> usize {
    let (n, d) = m.shape();
    let mut kept = 0;
    for j in 0..d {
        for prev in 0..j {
            let dot: f64 = (0..n).map(|i| m.get(i, j) * m.get(i, prev)).sum();
            for i in 0..n {
                let v = m.get(i, j) - dot * m.get(i, prev);
                m.set(i, j, v);
            }
        }
        let norm = libm::sqrt((0..n).map(|i| m.get(i, j) * m.get(i, j)).sum::<f64>());
        if norm > 1e-12 {
            for i in 0..n {
                let v = m.get(i, j) / norm;
                m.set(i, j, v);
            }
            kept += 1;
        } else {
            for i in 0..n {
                m.set(i, j, 0.0);
            }
        }
    }
    kept
}
