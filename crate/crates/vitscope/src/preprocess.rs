//! Image decoding and resizing ahead of the encoder.

use std::path::{Path, PathBuf};

use image::imageops::{self, FilterType};
use image::RgbImage;
use vitscope_core::{ImageTensor, VitError};

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("cannot decode {path}: {reason}")]
    Decode { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Invalid { path: PathBuf, source: VitError },
}

/// Bilinear resize to `size x size`, then per-channel standardization.
pub fn prepare(image: &RgbImage, size: u32) -> Result<ImageTensor, VitError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(VitError::InvalidImage {
            reason: "zero-sized image",
        });
    }
    let resized = if image.dimensions() == (size, size) {
        image.clone()
    } else {
        imageops::resize(image, size, size, FilterType::Triangle)
    };
    ImageTensor::from_rgb8(size as usize, size as usize, resized.as_raw())
}

pub fn load_image(path: &Path, size: u32) -> Result<ImageTensor, DecodeError> {
    let decoded = image::open(path).map_err(|e| DecodeError::Decode {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    prepare(&decoded.to_rgb8(), size).map_err(|source| DecodeError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}
