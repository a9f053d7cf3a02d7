//! Binary weight files.
//!
//! Layout, little-endian:
//!
//! ```text
//! b"VITW0001"
//! u64            header length in bytes
//! [u8; len]      UTF-8 JSON: { "<tensor name>": {"shape": [..], "offset": n}, ... }
//! payload        raw f32 values; `offset` counts bytes from the payload start
//! ```
//!
//! The optional header key `__metadata__` holds `{"config": ModelConfig}`.
//! Without it the ViT-Base configuration is assumed. Tensor names follow
//! [`vitscope_core::vit::weights`].
//!
//! Checkpoints from other frameworks convert by renaming tensors and
//! transposing projection matrices to `[in, out]`; a convolutional patch
//! embedding `[D, C, P, P]` reshapes to `[C*P*P, D]`, and its bias can be
//! added to rows `1..` of `pos_embed`.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use vitscope_core::vit::Tensor;
use vitscope_core::{ModelConfig, ModelWeights, VitError};

pub const MAGIC: &[u8; 8] = b"VITW0001";
const METADATA_KEY: &str = "__metadata__";

#[derive(Debug, thiserror::Error)]
pub enum WeightsError {
    #[error("cannot read weights: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt weight file: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Model(#[from] VitError),
}

#[derive(Serialize, Deserialize)]
struct Entry {
    shape: Vec<usize>,
    offset: u64,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    config: ModelConfig,
}

pub fn encode_weights(weights: &ModelWeights) -> Vec<u8> {
    let mut header = serde_json::Map::new();
    header.insert(
        METADATA_KEY.into(),
        serde_json::to_value(Metadata { config: weights.config }).expect("serializable"),
    );
    let mut payload = Vec::new();
    for (name, tensor) in weights.named_tensors() {
        let entry = Entry {
            shape: tensor.shape,
            offset: payload.len() as u64,
        };
        header.insert(name, serde_json::to_value(entry).expect("serializable"));
        for v in tensor.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let header = serde_json::to_vec(&header).expect("serializable");
    let mut out = Vec::with_capacity(16 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

pub fn decode_weights(bytes: &[u8]) -> Result<ModelWeights, WeightsError> {
    let corrupt = |m: &str| WeightsError::Corrupt(m.to_string());
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let header_end = usize::try_from(len)
        .ok()
        .and_then(|l| l.checked_add(16))
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| corrupt("header length exceeds file size"))?;
    let mut header: BTreeMap<String, serde_json::Value> =
        serde_json::from_slice(&bytes[16..header_end]).map_err(|e| WeightsError::Corrupt(format!("header: {e}")))?;
    let payload = &bytes[header_end..];

    let config = match header.remove(METADATA_KEY) {
        Some(v) => serde_json::from_value::<Metadata>(v)
            .map_err(|e| WeightsError::Corrupt(format!("metadata: {e}")))?
            .config,
        None => ModelConfig::default(),
    };
    let mut tensors = BTreeMap::new();
    for (name, value) in header {
        let entry: Entry =
            serde_json::from_value(value).map_err(|e| WeightsError::Corrupt(format!("entry `{name}`: {e}")))?;
        let count = entry
            .shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| WeightsError::Corrupt(format!("tensor `{name}` shape overflows")))?;
        let start = usize::try_from(entry.offset).unwrap_or(usize::MAX);
        let end = count.checked_mul(4).and_then(|b| b.checked_add(start));
        let raw = end
            .and_then(|end| payload.get(start..end))
            .ok_or_else(|| WeightsError::Corrupt(format!("tensor `{name}` extends past end of file")))?;
        let data = raw.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect();
        tensors.insert(name, Tensor::new(entry.shape, data));
    }
    Ok(ModelWeights::from_named_tensors(config, tensors)?)
}

pub fn write_weights(path: &Path, weights: &ModelWeights) -> Result<(), WeightsError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_weights(weights))?;
    Ok(())
}

pub fn read_weights(path: &Path) -> Result<ModelWeights, WeightsError> {
    decode_weights(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ModelConfig {
        ModelConfig {
            image_size: 32,
            patch_size: 16,
            channels: 3,
            hidden_dim: 8,
            num_layers: 2,
            num_heads: 2,
            mlp_dim: 16,
            num_classes: Some(3),
            layer_norm_eps: 1e-6,
        }
    }

    #[test]
    fn roundtrip() {
        let w = ModelWeights::random(toy(), 5).unwrap();
        assert_eq!(decode_weights(&encode_weights(&w)).unwrap(), w);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let bytes = encode_weights(&ModelWeights::random(toy(), 5).unwrap());
        let err = decode_weights(&bytes[..bytes.len() - 4]).unwrap_err();
        assert!(matches!(err, WeightsError::Corrupt(_)), "{err}");
        assert!(matches!(decode_weights(b"VITW0002xxxxxxxx"), Err(WeightsError::Corrupt(_))));
    }

    fn rewrite_header(bytes: &[u8], f: impl FnOnce(&mut serde_json::Map<String, serde_json::Value>)) -> Vec<u8> {
        let len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let mut header: serde_json::Map<String, serde_json::Value> = serde_json::from_slice(&bytes[16..16 + len]).unwrap();
        f(&mut header);
        let header = serde_json::to_vec(&header).unwrap();
        let mut out = MAGIC.to_vec();
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&bytes[16 + len..]);
        out
    }

    #[test]
    fn missing_and_misshapen_tensors_are_distinct() {
        let bytes = encode_weights(&ModelWeights::random(toy(), 5).unwrap());
        let missing = rewrite_header(&bytes, |h| {
            h.remove("layer.1.mlp.b2");
        });
        assert!(matches!(
            decode_weights(&missing),
            Err(WeightsError::Model(VitError::MissingTensor { .. }))
        ));
        let misshapen = rewrite_header(&bytes, |h| {
            h.get_mut("cls_token").unwrap()["shape"] = serde_json::json!([4, 2]);
        });
        assert!(matches!(
            decode_weights(&misshapen),
            Err(WeightsError::Model(VitError::TensorShape { .. }))
        ));
    }
}
