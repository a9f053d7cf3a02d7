//! Vision Transformer forward pass.
//!
//! An image is cut into `P x P` patches, each patch is projected into the
//! hidden space, a class token is prepended and positional rows are added.
//! The sequence then runs through `L` pre-norm encoder blocks, and the final
//! layer norm of the class token is the image embedding.

mod config;
pub mod layers;
mod weights;

use alloc::string::String;
use alloc::vec::Vec;

pub use config::ModelConfig;
pub use weights::{LayerNormParams, LayerWeights, Linear, ModelWeights, Tensor};

use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum VitError {
    #[error("invalid model configuration: {reason}")]
    InvalidConfig { reason: &'static str },
    #[error("invalid image: {reason}")]
    InvalidImage { reason: &'static str },
    #[error("image of {height}x{width} cannot be split into {patch}x{patch} patches")]
    Patch { height: usize, width: usize, patch: usize },
    #[error("shape mismatch in {op}: expected {expected:?}, found {found:?}")]
    Shape {
        op: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("tensor `{name}` missing from weights")]
    MissingTensor { name: String },
    #[error("tensor `{name}` has shape {found:?}, expected {expected:?}")]
    TensorShape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    #[error("tensor `{name}` contains non-finite values")]
    NonFinite { name: String },
    #[error("model has no classification head")]
    NoHead,
}

/// Standardized image in height x width x channel order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    values: Vec<f32>,
}

/// Per-channel standardization applied to `[0, 1]` pixel values.
pub const PIXEL_MEAN: f32 = 0.5;
pub const PIXEL_STD: f32 = 0.5;

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, values: Vec<f32>) -> Result<Self, VitError> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(VitError::InvalidImage {
                reason: "zero-sized dimension",
            });
        }
        if values.len() != height * width * channels {
            return Err(VitError::InvalidImage {
                reason: "buffer length does not match dimensions",
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(VitError::InvalidImage {
                reason: "non-finite pixel value",
            });
        }
        Ok(Self {
            height,
            width,
            channels,
            values,
        })
    }

    /// Interleaved 8-bit RGB, scaled to `[0, 1]` and standardized with mean
    /// 0.5 and std 0.5 per channel.
    pub fn from_rgb8(height: usize, width: usize, pixels: &[u8]) -> Result<Self, VitError> {
        let values = pixels
            .iter()
            .map(|&p| (f32::from(p) / 255.0 - PIXEL_MEAN) / PIXEL_STD)
            .collect();
        Self::new(height, width, 3, values)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        self.values[(y * self.width + x) * self.channels + c]
    }
}

/// `(N + 1) x D` token states; row 0 is the class token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence(pub Matrix<f32>);

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn class_token(&self) -> &[f32] {
        self.0.row(0)
    }
}

/// Fixed-size image embedding.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Embedding {
    pub values: Vec<f32>,
    pub normalized: bool,
}

impl Embedding {
    pub fn new(values: Vec<f32>) -> Self {
        Self {
            values,
            normalized: false,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l2_norm(&self) -> f64 {
        libm::sqrt(self.values.iter().map(|&v| f64::from(v) * f64::from(v)).sum())
    }
}

/// Splits the image into non-overlapping `P x P` patches in row-major patch
/// order. Each row of the result is one patch flattened as
/// `(channel, row, col)`.
pub fn patchify(image: &ImageTensor, patch: usize) -> Result<Matrix<f32>, VitError> {
    let (h, w, c) = (image.height, image.width, image.channels);
    if patch == 0 || h % patch != 0 || w % patch != 0 {
        return Err(VitError::Patch {
            height: h,
            width: w,
            patch,
        });
    }
    let (rows, cols) = (h / patch, w / patch);
    let mut out = Matrix::zeros(rows * cols, patch * patch * c);
    for pr in 0..rows {
        for pc in 0..cols {
            let dst = out.row_mut(pr * cols + pc);
            let mut idx = 0;
            for ch in 0..c {
                for y in 0..patch {
                    for x in 0..patch {
                        dst[idx] = image.at(pr * patch + y, pc * patch + x, ch);
                        idx += 1;
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `z0 = [x_class; x_p^1 E; ...; x_p^N E] + E_pos`.
pub fn embed_tokens(patches: &Matrix<f32>, weights: &ModelWeights) -> Result<TokenSequence, VitError> {
    let projected = layers::matmul(patches, &weights.patch_projection)?;
    let d = weights.patch_projection.cols();
    if weights.positional.shape() != (patches.rows() + 1, d) {
        return Err(VitError::Shape {
            op: "positional embedding",
            expected: (patches.rows() + 1, d),
            found: weights.positional.shape(),
        });
    }
    if weights.class_token.len() != d {
        return Err(VitError::Shape {
            op: "class token",
            expected: (1, d),
            found: (1, weights.class_token.len()),
        });
    }
    let mut z = weights.positional.clone();
    for (o, &c) in z.row_mut(0).iter_mut().zip(&weights.class_token) {
        *o += c;
    }
    for i in 0..projected.rows() {
        for (o, &p) in z.row_mut(i + 1).iter_mut().zip(projected.row(i)) {
            *o += p;
        }
    }
    Ok(TokenSequence(z))
}

/// One pre-norm transformer block.
pub fn encoder_layer(z: &TokenSequence, layer: &LayerWeights, config: &ModelConfig) -> Result<TokenSequence, VitError> {
    layers::encoder_block(&z.0, layer, config.num_heads, config.layer_norm_eps).map(TokenSequence)
}

/// Token states after every encoder block, before the final layer norm.
pub fn encode(image: &ImageTensor, weights: &ModelWeights) -> Result<TokenSequence, VitError> {
    let config = &weights.config;
    if image.channels != config.channels {
        return Err(VitError::InvalidImage {
            reason: "channel count differs from model configuration",
        });
    }
    if image.height != config.image_size || image.width != config.image_size {
        return Err(VitError::InvalidImage {
            reason: "image must be resized to image_size x image_size",
        });
    }
    let patches = patchify(image, config.patch_size)?;
    let mut z = embed_tokens(&patches, weights)?;
    for layer in &weights.layers {
        z = encoder_layer(&z, layer, config)?;
    }
    Ok(z)
}

/// Embedding of one image: the final-layer-normed class token.
pub fn forward(image: &ImageTensor, weights: &ModelWeights) -> Result<Embedding, VitError> {
    let z = encode(image, weights)?;
    let d = weights.config.hidden_dim;
    let mut out = alloc::vec![0.0f32; d];
    if weights.final_norm.scale.len() != d || weights.final_norm.shift.len() != d {
        return Err(VitError::Shape {
            op: "final layer norm",
            expected: (1, d),
            found: (1, weights.final_norm.scale.len()),
        });
    }
    layers::layer_norm_row(z.class_token(), &weights.final_norm, weights.config.layer_norm_eps, &mut out);
    Ok(Embedding::new(out))
}

/// Class probabilities `softmax(z W)` from the classification head.
pub fn classify(embedding: &Embedding, weights: &ModelWeights) -> Result<Vec<f64>, VitError> {
    let head = weights.head.as_ref().ok_or(VitError::NoHead)?;
    if head.rows() != embedding.len() {
        return Err(VitError::Shape {
            op: "classification head",
            expected: (embedding.len(), head.cols()),
            found: head.shape(),
        });
    }
    let mut logits = alloc::vec![0.0f64; head.cols()];
    for (i, &z) in embedding.values.iter().enumerate() {
        for (l, &w) in logits.iter_mut().zip(head.row(i)) {
            *l += f64::from(z) * f64::from(w);
        }
    }
    layers::softmax_in_place(&mut logits);
    Ok(logits)
}

/// Scales to unit L2 norm. The zero vector is returned unchanged with
/// `normalized == false`.
pub fn normalize(e: &Embedding) -> Embedding {
    let norm = e.l2_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Embedding {
            values: e.values.clone(),
            normalized: false,
        };
    }
    Embedding {
        values: e.values.iter().map(|&v| (f64::from(v) / norm) as f32).collect(),
        normalized: true,
    }
}
