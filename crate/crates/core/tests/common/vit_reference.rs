//! Scalar-loop ViT forward pass in f64 over plain nested vectors.
#![allow(dead_code)]

use vitscope_core::{ImageTensor, Matrix, ModelWeights};

fn col(m: &Matrix<f32>) -> Vec<Vec<f64>> {
    m.iter_rows().map(|r| r.iter().map(|&v| f64::from(v)).collect()).collect()
}

fn vecf(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| f64::from(x)).collect()
}

fn ln(x: &[f64], scale: &[f32], shift: &[f32], eps: f64) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (0..x.len())
        .map(|i| (x[i] - mean) / (var + eps).sqrt() * f64::from(scale[i]) + f64::from(shift[i]))
        .collect()
}

fn affine(x: &[f64], w: &[Vec<f64>], b: &[f32]) -> Vec<f64> {
    let mut out = vecf(b);
    for (i, xi) in x.iter().enumerate() {
        for j in 0..out.len() {
            out[j] += xi * w[i][j];
        }
    }
    out
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / 2f64.sqrt()))
}

pub fn reference_forward(image: &ImageTensor, w: &ModelWeights) -> Vec<f64> {
    let cfg = &w.config;
    let (p, d) = (cfg.patch_size, cfg.hidden_dim);
    let grid = cfg.image_size / p;
    let e = col(&w.patch_projection);
    let pos = col(&w.positional);

    let mut z: Vec<Vec<f64>> = Vec::new();
    z.push((0..d).map(|j| f64::from(w.class_token[j]) + pos[0][j]).collect());
    for pr in 0..grid {
        for pc in 0..grid {
            let mut tok = pos[1 + pr * grid + pc].clone();
            let mut k = 0;
            for c in 0..cfg.channels {
                for y in 0..p {
                    for x in 0..p {
                        let px = f64::from(image.at(pr * p + y, pc * p + x, c));
                        for j in 0..d {
                            tok[j] += px * e[k][j];
                        }
                        k += 1;
                    }
                }
            }
            z.push(tok);
        }
    }

    let heads = cfg.num_heads;
    let dh = d / heads;
    for layer in &w.layers {
        let h: Vec<Vec<f64>> = z.iter().map(|t| ln(t, &layer.ln1.scale, &layer.ln1.shift, cfg.layer_norm_eps)).collect();
        let q: Vec<Vec<f64>> = h.iter().map(|t| affine(t, &col(&layer.query.weight), &layer.query.bias)).collect();
        let kk: Vec<Vec<f64>> = h.iter().map(|t| affine(t, &col(&layer.key.weight), &layer.key.bias)).collect();
        let v: Vec<Vec<f64>> = h.iter().map(|t| affine(t, &col(&layer.value.weight), &layer.value.bias)).collect();
        let n = z.len();
        let mut concat = vec![vec![0.0; d]; n];
        for hd in 0..heads {
            let off = hd * dh;
            for i in 0..n {
                let mut scores = vec![0.0; n];
                for j in 0..n {
                    let mut s = 0.0;
                    for c in 0..dh {
                        s += q[i][off + c] * kk[j][off + c];
                    }
                    scores[j] = s / (dh as f64).sqrt();
                }
                let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let total: f64 = scores.iter().map(|s| (s - m).exp()).sum();
                for j in 0..n {
                    let a = (scores[j] - m).exp() / total;
                    for c in 0..dh {
                        concat[i][off + c] += a * v[j][off + c];
                    }
                }
            }
        }
        for i in 0..n {
            let o = affine(&concat[i], &col(&layer.output.weight), &layer.output.bias);
            for j in 0..d {
                z[i][j] += o[j];
            }
        }
        for i in 0..n {
            let h2 = ln(&z[i], &layer.ln2.scale, &layer.ln2.shift, cfg.layer_norm_eps);
            let hidden: Vec<f64> = affine(&h2, &col(&layer.mlp_in.weight), &layer.mlp_in.bias).into_iter().map(gelu).collect();
            let o = affine(&hidden, &col(&layer.mlp_out.weight), &layer.mlp_out.bias);
            for j in 0..d {
                z[i][j] += o[j];
            }
        }
    }
    ln(&z[0], &w.final_norm.scale, &w.final_norm.shift, cfg.layer_norm_eps)
}

pub fn max_relative_error(got: &[f32], want: &[f64]) -> f64 {
    let scale = want.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let diff = got.iter().zip(want).fold(0.0f64, |m, (&g, w)| m.max((f64::from(g) - w).abs()));
    diff / scale
}
