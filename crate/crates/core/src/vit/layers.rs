//! Building blocks of the encoder: dense products, layer norm, GELU,
//! scaled dot-product attention and the pre-norm transformer block.
//!
//! Products accumulate in `f32`; the sums inside softmax and layer norm are
//! carried in `f64`.

use alloc::vec;

use super::weights::{LayerNormParams, LayerWeights, Linear};
use super::VitError;
use crate::matrix::Matrix;

/// `a * b`.
pub fn matmul(a: &Matrix<f32>, b: &Matrix<f32>) -> Result<Matrix<f32>, VitError> {
    if a.cols() != b.rows() {
        return Err(VitError::Shape {
            op: "matmul",
            expected: (a.rows(), a.cols()),
            found: b.shape(),
        });
    }
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (k, &aik) in a_row.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                *o += aik * bkj;
            }
        }
    }
    Ok(out)
}

/// `x W + b`, row-wise.
pub fn linear(x: &Matrix<f32>, layer: &Linear) -> Result<Matrix<f32>, VitError> {
    let mut out = matmul(x, &layer.weight)?;
    if layer.bias.len() != out.cols() {
        return Err(VitError::Shape {
            op: "linear bias",
            expected: (1, out.cols()),
            found: (1, layer.bias.len()),
        });
    }
    for i in 0..out.rows() {
        for (o, &b) in out.row_mut(i).iter_mut().zip(&layer.bias) {
            *o += b;
        }
    }
    Ok(out)
}

/// Normalizes one row to zero mean and unit variance, then applies the
/// affine scale/shift.
pub fn layer_norm_row(x: &[f32], params: &LayerNormParams, eps: f64, out: &mut [f32]) {
    let n = x.len() as f64;
    let mean = x.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = x
        .iter()
        .map(|&v| {
            let c = f64::from(v) - mean;
            c * c
        })
        .sum::<f64>()
        / n;
    let inv = 1.0 / libm::sqrt(var + eps);
    for (((o, &v), &g), &b) in out.iter_mut().zip(x).zip(&params.scale).zip(&params.shift) {
        *o = ((f64::from(v) - mean) * inv) as f32 * g + b;
    }
}

pub fn layer_norm(x: &Matrix<f32>, params: &LayerNormParams, eps: f64) -> Result<Matrix<f32>, VitError> {
    if params.scale.len() != x.cols() || params.shift.len() != x.cols() {
        return Err(VitError::Shape {
            op: "layer_norm",
            expected: (1, x.cols()),
            found: (1, params.scale.len()),
        });
    }
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for i in 0..x.rows() {
        layer_norm_row(x.row(i), params, eps, out.row_mut(i));
    }
    Ok(out)
}

/// Exact GELU, `x * Phi(x)`.
#[inline]
pub fn gelu(x: f32) -> f32 {
    0.5 * x * (1.0 + libm::erff(x * core::f32::consts::FRAC_1_SQRT_2))
}

/// Softmax with max subtraction; the exponentials and their sum are `f64`.
pub fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = libm::exp(*v - max);
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Row-stochastic attention matrix `softmax(Q K^T / sqrt(d_h))`, where `d_h`
/// is the column count of `q`.
pub fn attention_weights(q: &Matrix<f32>, k: &Matrix<f32>) -> Result<Matrix<f64>, VitError> {
    if q.cols() != k.cols() || q.rows() != k.rows() {
        return Err(VitError::Shape {
            op: "attention",
            expected: q.shape(),
            found: k.shape(),
        });
    }
    let n = q.rows();
    let scale = 1.0 / libm::sqrt(q.cols() as f64);
    let mut probs = Matrix::zeros(n, n);
    for i in 0..n {
        let qi = q.row(i);
        let row = probs.row_mut(i);
        for (j, r) in row.iter_mut().enumerate() {
            let dot: f32 = qi.iter().zip(k.row(j)).map(|(a, b)| a * b).sum();
            *r = f64::from(dot) * scale;
        }
        softmax_in_place(row);
    }
    Ok(probs)
}

/// Scaled dot-product attention for a single head.
///
/// Scores are divided by `sqrt(d_h)`, the per-head width, rather than by
/// the model width; with one head the two coincide.
pub fn attention(q: &Matrix<f32>, k: &Matrix<f32>, v: &Matrix<f32>) -> Result<Matrix<f32>, VitError> {
    if v.rows() != k.rows() {
        return Err(VitError::Shape {
            op: "attention",
            expected: k.shape(),
            found: v.shape(),
        });
    }
    let probs = attention_weights(q, k)?;
    let mut out = Matrix::zeros(q.rows(), v.cols());
    for i in 0..q.rows() {
        let mut acc = vec![0.0f32; v.cols()];
        for (j, &p) in probs.row(i).iter().enumerate() {
            let p = p as f32;
            for (a, &x) in acc.iter_mut().zip(v.row(j)) {
                *a += p * x;
            }
        }
        out.row_mut(i).copy_from_slice(&acc);
    }
    Ok(out)
}

/// `h` parallel heads over column blocks of the projected input,
/// concatenated and passed through the output projection.
pub fn multi_head_attention(x: &Matrix<f32>, layer: &LayerWeights, num_heads: usize) -> Result<Matrix<f32>, VitError> {
    let q = linear(x, &layer.query)?;
    let k = linear(x, &layer.key)?;
    let v = linear(x, &layer.value)?;
    let width = q.cols();
    if num_heads == 0 || width % num_heads != 0 {
        return Err(VitError::InvalidConfig {
            reason: "hidden_dim must be divisible by num_heads",
        });
    }
    let head_dim = width / num_heads;
    let mut concat = Matrix::zeros(x.rows(), width);
    for h in 0..num_heads {
        let start = h * head_dim;
        let out = attention(
            &q.column_block(start, head_dim),
            &k.column_block(start, head_dim),
            &v.column_block(start, head_dim),
        )?;
        for i in 0..out.rows() {
            concat.row_mut(i)[start..start + head_dim].copy_from_slice(out.row(i));
        }
    }
    linear(&concat, &layer.output)
}

pub fn mlp(x: &Matrix<f32>, layer: &LayerWeights) -> Result<Matrix<f32>, VitError> {
    let mut hidden = linear(x, &layer.mlp_in)?;
    for v in hidden.as_mut_slice() {
        *v = gelu(*v);
    }
    linear(&hidden, &layer.mlp_out)
}

fn add_assign(acc: &mut Matrix<f32>, other: &Matrix<f32>) {
    for (a, &b) in acc.as_mut_slice().iter_mut().zip(other.as_slice()) {
        *a += b;
    }
}

/// Pre-norm block: `z' = z + MHSA(LN(z))`, `out = z' + MLP(LN(z'))`.
pub fn encoder_block(
    z: &Matrix<f32>,
    layer: &LayerWeights,
    num_heads: usize,
    eps: f64,
) -> Result<Matrix<f32>, VitError> {
    let mut out = z.clone();
    let attn = multi_head_attention(&layer_norm(z, &layer.ln1, eps)?, layer, num_heads)?;
    add_assign(&mut out, &attn);
    let ff = mlp(&layer_norm(&out, &layer.ln2, eps)?, layer)?;
    add_assign(&mut out, &ff);
    Ok(out)
}
