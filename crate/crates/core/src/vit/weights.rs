//! Parameter storage and the tensor naming scheme.
//!
//! | name                     | shape            |
//! |--------------------------|------------------|
//! | `patch_embed.weight`     | `[P*P*C, D]`     |
//! | `cls_token`              | `[D]`            |
//! | `pos_embed`              | `[N + 1, D]`     |
//! | `layer.{i}.ln1.scale`    | `[D]`            |
//! | `layer.{i}.ln1.shift`    | `[D]`            |
//! | `layer.{i}.attn.wq`      | `[D, D]`         |
//! | `layer.{i}.attn.bq`      | `[D]`            |
//! | `layer.{i}.attn.wk/bk`   | `[D, D]` / `[D]` |
//! | `layer.{i}.attn.wv/bv`   | `[D, D]` / `[D]` |
//! | `layer.{i}.attn.wo/bo`   | `[D, D]` / `[D]` |
//! | `layer.{i}.ln2.scale`    | `[D]`            |
//! | `layer.{i}.ln2.shift`    | `[D]`            |
//! | `layer.{i}.mlp.w1`       | `[D, M]`         |
//! | `layer.{i}.mlp.b1`       | `[M]`            |
//! | `layer.{i}.mlp.w2`       | `[M, D]`         |
//! | `layer.{i}.mlp.b2`       | `[D]`            |
//! | `final_ln.scale/shift`   | `[D]`            |
//! | `head.weight` (optional) | `[D, K]`         |
//!
//! Projection matrices multiply row vectors from the left (`y = x W + b`).
//! Patches are flattened channel-major, `(c, row, col)`, which matches a
//! reshaped convolution kernel of shape `[D, C, P, P]` after transposition.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand_distr::{Distribution, StandardNormal};

use super::{ModelConfig, VitError};
use crate::matrix::Matrix;
use crate::rng::{seeded_rng, Rng};

/// A named tensor as stored on disk: shape plus flat row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        Self { shape, data }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNormParams {
    pub scale: Vec<f32>,
    pub shift: Vec<f32>,
}

impl LayerNormParams {
    pub fn identity(dim: usize) -> Self {
        Self {
            scale: vec![1.0; dim],
            shift: vec![0.0; dim],
        }
    }
}

/// `y = x W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Matrix<f32>,
    pub bias: Vec<f32>,
}

impl Linear {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(inputs, outputs),
            bias: vec![0.0; outputs],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub ln1: LayerNormParams,
    pub query: Linear,
    pub key: Linear,
    pub value: Linear,
    pub output: Linear,
    pub ln2: LayerNormParams,
    pub mlp_in: Linear,
    pub mlp_out: Linear,
}

impl LayerWeights {
    /// All projections zero and both layer norms with zero scale: the
    /// block reduces to the identity through its residual connections.
    pub fn zeros(hidden_dim: usize, mlp_dim: usize) -> Self {
        let zero_norm = LayerNormParams {
            scale: vec![0.0; hidden_dim],
            shift: vec![0.0; hidden_dim],
        };
        Self {
            ln1: zero_norm.clone(),
            query: Linear::zeros(hidden_dim, hidden_dim),
            key: Linear::zeros(hidden_dim, hidden_dim),
            value: Linear::zeros(hidden_dim, hidden_dim),
            output: Linear::zeros(hidden_dim, hidden_dim),
            ln2: zero_norm,
            mlp_in: Linear::zeros(hidden_dim, mlp_dim),
            mlp_out: Linear::zeros(mlp_dim, hidden_dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub config: ModelConfig,
    /// `E`, shape `(P^2 C) x D`.
    pub patch_projection: Matrix<f32>,
    pub class_token: Vec<f32>,
    /// `(N + 1) x D`; row 0 belongs to the class token.
    pub positional: Matrix<f32>,
    pub layers: Vec<LayerWeights>,
    pub final_norm: LayerNormParams,
    /// `D x K` classification head.
    pub head: Option<Matrix<f32>>,
}

fn gaussian_vec(rng: &mut Rng, len: usize, mean: f32, std: f32) -> Vec<f32> {
    (0..len)
        .map(|_| {
            let z: f32 = StandardNormal.sample(rng);
            mean + std * z
        })
        .collect()
}

fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> Matrix<f32> {
    let std = 1.0 / libm::sqrtf(rows as f32);
    Matrix::from_vec(rows, cols, gaussian_vec(rng, rows * cols, 0.0, std)).expect("shape")
}

fn random_linear(rng: &mut Rng, inputs: usize, outputs: usize) -> Linear {
    Linear {
        weight: gaussian_matrix(rng, inputs, outputs),
        bias: gaussian_vec(rng, outputs, 0.0, 0.02),
    }
}

fn random_norm(rng: &mut Rng, dim: usize) -> LayerNormParams {
    LayerNormParams {
        scale: gaussian_vec(rng, dim, 1.0, 0.02),
        shift: gaussian_vec(rng, dim, 0.0, 0.02),
    }
}

impl ModelWeights {
    /// Seeded random initialization, for tests and for running the pipeline
    /// without a pretrained checkpoint. Projections are drawn with standard
    /// deviation `1/sqrt(fan_in)` so activations stay O(1) through the stack.
    pub fn random(config: ModelConfig, seed: u64) -> Result<Self, VitError> {
        config.validate()?;
        let mut rng = seeded_rng(seed, 0);
        let d = config.hidden_dim;
        let m = config.mlp_dim;
        let patch_projection = gaussian_matrix(&mut rng, config.patch_dim(), d);
        let class_token = gaussian_vec(&mut rng, d, 0.0, 0.02);
        let positional = Matrix::from_vec(
            config.num_patches() + 1,
            d,
            gaussian_vec(&mut rng, (config.num_patches() + 1) * d, 0.0, 0.02),
        )
        .expect("shape");
        let layers = (0..config.num_layers)
            .map(|_| LayerWeights {
                ln1: random_norm(&mut rng, d),
                query: random_linear(&mut rng, d, d),
                key: random_linear(&mut rng, d, d),
                value: random_linear(&mut rng, d, d),
                output: random_linear(&mut rng, d, d),
                ln2: random_norm(&mut rng, d),
                mlp_in: random_linear(&mut rng, d, m),
                mlp_out: random_linear(&mut rng, m, d),
            })
            .collect();
        let final_norm = random_norm(&mut rng, d);
        let head = config.num_classes.map(|k| gaussian_matrix(&mut rng, d, k));
        Ok(Self {
            config,
            patch_projection,
            class_token,
            positional,
            layers,
            final_norm,
            head,
        })
    }

    /// Every tensor under its canonical name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        fn mat(m: &Matrix<f32>) -> Tensor {
            Tensor::new(vec![m.rows(), m.cols()], m.as_slice().to_vec())
        }
        fn vector(v: &[f32]) -> Tensor {
            Tensor::new(vec![v.len()], v.to_vec())
        }
        let mut out = vec![
            (String::from("patch_embed.weight"), mat(&self.patch_projection)),
            (String::from("cls_token"), vector(&self.class_token)),
            (String::from("pos_embed"), mat(&self.positional)),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            let p = format!("layer.{i}");
            out.push((format!("{p}.ln1.scale"), vector(&layer.ln1.scale)));
            out.push((format!("{p}.ln1.shift"), vector(&layer.ln1.shift)));
            for (tag, lin) in [
                ("q", &layer.query),
                ("k", &layer.key),
                ("v", &layer.value),
                ("o", &layer.output),
            ] {
                out.push((format!("{p}.attn.w{tag}"), mat(&lin.weight)));
                out.push((format!("{p}.attn.b{tag}"), vector(&lin.bias)));
            }
            out.push((format!("{p}.ln2.scale"), vector(&layer.ln2.scale)));
            out.push((format!("{p}.ln2.shift"), vector(&layer.ln2.shift)));
            out.push((format!("{p}.mlp.w1"), mat(&layer.mlp_in.weight)));
            out.push((format!("{p}.mlp.b1"), vector(&layer.mlp_in.bias)));
            out.push((format!("{p}.mlp.w2"), mat(&layer.mlp_out.weight)));
            out.push((format!("{p}.mlp.b2"), vector(&layer.mlp_out.bias)));
        }
        out.push((String::from("final_ln.scale"), vector(&self.final_norm.scale)));
        out.push((String::from("final_ln.shift"), vector(&self.final_norm.shift)));
        if let Some(head) = &self.head {
            out.push((String::from("head.weight"), mat(head)));
        }
        out
    }

    /// Assembles weights from named tensors, checking every shape against
    /// `config`. Extra tensors are ignored. `head.weight` is required only
    /// when `config.num_classes` is set.
    pub fn from_named_tensors(config: ModelConfig, mut tensors: BTreeMap<String, Tensor>) -> Result<Self, VitError> {
        config.validate()?;
        let d = config.hidden_dim;
        let m = config.mlp_dim;
        let mut take = |name: String, shape: &[usize]| -> Result<Tensor, VitError> {
            let t = tensors.remove(&name).ok_or_else(|| VitError::MissingTensor { name: name.clone() })?;
            if t.shape != shape {
                return Err(VitError::TensorShape {
                    name,
                    expected: shape.to_vec(),
                    found: t.shape,
                });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(VitError::NonFinite { name });
            }
            Ok(t)
        };
        let matrix = |t: Tensor| Matrix::from_vec(t.shape[0], t.shape[1], t.data).expect("shape checked");

        let patch_projection = matrix(take("patch_embed.weight".into(), &[config.patch_dim(), d])?);
        let class_token = take("cls_token".into(), &[d])?.data;
        let positional = matrix(take("pos_embed".into(), &[config.num_patches() + 1, d])?);
        let mut layers = Vec::with_capacity(config.num_layers);
        for i in 0..config.num_layers {
            let p = format!("layer.{i}");
            let mut norm = |tag: &str| -> Result<LayerNormParams, VitError> {
                Ok(LayerNormParams {
                    scale: take(format!("{p}.{tag}.scale"), &[d])?.data,
                    shift: take(format!("{p}.{tag}.shift"), &[d])?.data,
                })
            };
            let ln1 = norm("ln1")?;
            let ln2 = norm("ln2")?;
            let mut linear = |w: String, b: String, inputs: usize, outputs: usize| -> Result<Linear, VitError> {
                Ok(Linear {
                    weight: matrix(take(w, &[inputs, outputs])?),
                    bias: take(b, &[outputs])?.data,
                })
            };
            let query = linear(format!("{p}.attn.wq"), format!("{p}.attn.bq"), d, d)?;
            let key = linear(format!("{p}.attn.wk"), format!("{p}.attn.bk"), d, d)?;
            let value = linear(format!("{p}.attn.wv"), format!("{p}.attn.bv"), d, d)?;
            let output = linear(format!("{p}.attn.wo"), format!("{p}.attn.bo"), d, d)?;
            let mlp_in = linear(format!("{p}.mlp.w1"), format!("{p}.mlp.b1"), d, m)?;
            let mlp_out = linear(format!("{p}.mlp.w2"), format!("{p}.mlp.b2"), m, d)?;
            layers.push(LayerWeights {
                ln1,
                query,
                key,
                value,
                output,
                ln2,
                mlp_in,
                mlp_out,
            });
        }
        let final_norm = LayerNormParams {
            scale: take("final_ln.scale".into(), &[d])?.data,
            shift: take("final_ln.shift".into(), &[d])?.data,
        };
        let head = match config.num_classes {
            Some(k) => Some(matrix(take("head.weight".into(), &[d, k])?)),
            None => None,
        };
        Ok(Self {
            config,
            patch_projection,
            class_token,
            positional,
            layers,
            final_norm,
            head,
        })
    }
}
