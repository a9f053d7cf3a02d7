use super::VitError;

/// Architecture hyperparameters. The default is ViT-Base/16 at 224x224.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelConfig {
    pub image_size: usize,
    pub patch_size: usize,
    pub channels: usize,
    pub hidden_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub mlp_dim: usize,
    /// Output classes of the optional classification head.
    pub num_classes: Option<usize>,
    pub layer_norm_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            image_size: 224,
            patch_size: 16,
            channels: 3,
            hidden_dim: 768,
            num_layers: 12,
            num_heads: 12,
            mlp_dim: 3072,
            num_classes: None,
            layer_norm_eps: 1e-6,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), VitError> {
        let dims = [
            ("image_size", self.image_size),
            ("patch_size", self.patch_size),
            ("channels", self.channels),
            ("hidden_dim", self.hidden_dim),
            ("num_layers", self.num_layers),
            ("num_heads", self.num_heads),
            ("mlp_dim", self.mlp_dim),
        ];
        for (name, value) in dims {
            if value == 0 {
                return Err(VitError::InvalidConfig { reason: name });
            }
        }
        if self.num_classes == Some(0) {
            return Err(VitError::InvalidConfig { reason: "num_classes" });
        }
        if self.image_size % self.patch_size != 0 {
            return Err(VitError::InvalidConfig {
                reason: "image_size must be divisible by patch_size",
            });
        }
        if self.hidden_dim % self.num_heads != 0 {
            return Err(VitError::InvalidConfig {
                reason: "hidden_dim must be divisible by num_heads",
            });
        }
        if !(self.layer_norm_eps > 0.0) {
            return Err(VitError::InvalidConfig { reason: "layer_norm_eps" });
        }
        Ok(())
    }

    /// Patches per image, `N = (image_size / P)^2`.
    pub fn num_patches(&self) -> usize {
        let side = self.image_size / self.patch_size;
        side * side
    }

    /// Length of a flattened patch, `P^2 * C`.
    pub fn patch_dim(&self) -> usize {
        self.patch_size * self.patch_size * self.channels
    }

    pub fn head_dim(&self) -> usize {
        self.hidden_dim / self.num_heads
    }

    /// Parameter count, including the head when configured.
    pub fn parameter_count(&self) -> usize {
        let d = self.hidden_dim;
        let m = self.mlp_dim;
        let per_layer = 4 * d + 4 * (d * d + d) + (d * m + m) + (m * d + d);
        self.patch_dim() * d + d + (self.num_patches() + 1) * d + self.num_layers * per_layer + 2 * d
            + self.num_classes.map_or(0, |k| d * k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vit_base_geometry() {
        let cfg = ModelConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.num_patches(), 196);
        assert_eq!(cfg.patch_dim(), 768);
        assert_eq!(cfg.head_dim(), 64);
        // ViT-B/16 without the classifier is ~85.8M parameters (no patch bias here).
        assert_eq!(cfg.parameter_count(), 85_797_888);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let cfg = ModelConfig {
            image_size: 100,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ModelConfig {
            num_heads: 5,
            ..ModelConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
