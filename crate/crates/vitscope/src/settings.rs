//! Resolved configuration: built-in defaults, then a `key = value` file,
//! then command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use vitscope_core::{KMeansConfig, LayoutConfig, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Umap,
    Pca,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "umap" => Ok(Self::Umap),
            "pca" => Ok(Self::Pca),
            other => Err(format!("unknown reduction method `{other}` (expected umap or pca)")),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Umap => "umap",
            Self::Pca => "pca",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub threads: Option<usize>,

    pub source: String,
    pub dedup: bool,
    pub sample: Option<usize>,

    pub weights: Option<PathBuf>,
    pub random_weights: bool,
    pub normalize: bool,
    pub model: ModelConfig,

    pub method: Method,
    pub dim: usize,
    pub n_neighbors: usize,
    pub min_dist: f64,
    pub spread: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub negative_samples: usize,

    pub k: usize,
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,

    pub silhouette_sample: Option<usize>,
    pub dims: Vec<usize>,
    pub m: usize,

    pub width: u32,
    pub height: u32,
    pub radius: f64,
    pub palette: Vec<String>,
    pub highlight: Vec<u64>,
}

impl Default for Settings {
    fn default() -> Self {
        let layout = LayoutConfig::default();
        let kmeans = KMeansConfig::default();
        Self {
            seed: 42,
            threads: None,
            source: "local".into(),
            dedup: true,
            sample: None,
            weights: None,
            random_weights: false,
            normalize: true,
            model: ModelConfig::default(),
            method: Method::Umap,
            dim: 64,
            n_neighbors: layout.n_neighbors,
            min_dist: layout.min_dist,
            spread: layout.spread,
            epochs: layout.epochs,
            learning_rate: layout.learning_rate,
            negative_samples: layout.negative_samples,
            k: kmeans.k,
            n_init: kmeans.n_init,
            max_iter: kmeans.max_iter,
            tol: kmeans.tol,
            silhouette_sample: None,
            dims: vec![16, 32, 64, 128],
            m: 10,
            width: 800,
            height: 600,
            radius: 3.0,
            palette: Vec::new(),
            highlight: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {reason}")]
    Syntax { path: PathBuf, line: usize, reason: String },
    #[error("cannot read config {path}: {reason}")]
    Read { path: PathBuf, reason: String },
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("invalid value `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("invalid value `{value}` for `{key}`: expected true or false")),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>, String>
where
    T::Err: fmt::Display,
{
    if value.is_empty() || value == "none" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl Settings {
    /// Applies one setting given as text.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "seed" => self.seed = parse(key, value)?,
            "threads" => self.threads = parse_optional(key, value)?,
            "source" => self.source = value.to_string(),
            "dedup" => self.dedup = parse_bool(key, value)?,
            "sample" => self.sample = parse_optional(key, value)?,
            "weights" => self.weights = (!value.is_empty()).then(|| PathBuf::from(value)),
            "random_weights" => self.random_weights = parse_bool(key, value)?,
            "normalize" => self.normalize = parse_bool(key, value)?,
            "image_size" => self.model.image_size = parse(key, value)?,
            "patch_size" => self.model.patch_size = parse(key, value)?,
            "hidden_dim" => self.model.hidden_dim = parse(key, value)?,
            "num_layers" => self.model.num_layers = parse(key, value)?,
            "num_heads" => self.model.num_heads = parse(key, value)?,
            "mlp_dim" => self.model.mlp_dim = parse(key, value)?,
            "method" => self.method = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "n_neighbors" => self.n_neighbors = parse(key, value)?,
            "min_dist" => self.min_dist = parse(key, value)?,
            "spread" => self.spread = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "negative_samples" => self.negative_samples = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "n_init" => self.n_init = parse(key, value)?,
            "max_iter" => self.max_iter = parse(key, value)?,
            "tol" => self.tol = parse(key, value)?,
            "silhouette_sample" => self.silhouette_sample = parse_optional(key, value)?,
            "dims" => self.dims = parse_list(key, value)?,
            "m" => self.m = parse(key, value)?,
            "width" => self.width = parse(key, value)?,
            "height" => self.height = parse(key, value)?,
            "radius" => self.radius = parse(key, value)?,
            "palette" => self.palette = parse_list(key, value)?,
            "highlight" => self.highlight = parse_list(key, value)?,
            _ => return Err(format!("unknown setting `{key}`")),
        }
        Ok(())
    }

    /// Applies a config file of `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, path: &Path, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |reason: String| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: i + 1,
                reason,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| syntax("expected `key = value`".into()))?;
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value);
            self.set(key.trim(), value).map_err(syntax)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        self.apply_text(path, &text)
    }

    pub fn layout(&self, target_dim: usize) -> LayoutConfig {
        LayoutConfig {
            n_neighbors: self.n_neighbors,
            min_dist: self.min_dist,
            spread: self.spread,
            target_dim,
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            negative_samples: self.negative_samples,
            a: None,
            b: None,
            seed: self.seed,
        }
    }

    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.k,
            max_iter: self.max_iter,
            tol: self.tol,
            n_init: self.n_init,
            seed: self.seed,
        }
    }
}
