//! Command-line interface definition.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::settings::{Method, Settings};

#[derive(Debug, Parser)]
#[command(name = "vitscope", version, about = "Embed images with a vision transformer, reduce, cluster and report")]
pub struct Cli {
    /// `key = value` settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "vitscope-out")]
    pub out: PathBuf,
    /// Re-run even when the outputs are up to date.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a manifest from an image directory.
    Ingest(IngestArgs),
    /// Embed every manifest image with the encoder.
    Embed(EmbedArgs),
    /// Project a store to fewer dimensions.
    Reduce(ReduceArgs),
    /// k-means on a store.
    Cluster(ClusterArgs),
    /// Validity indices for (store, labels) pairs.
    Metrics(MetricsArgs),
    /// Reduce, cluster and score at several dimensions.
    Sweep(SweepArgs),
    /// Points nearest each centroid.
    Representatives(RepresentativesArgs),
    /// SVG scatter of a 2-D projection.
    Plot(PlotArgs),
    /// Markdown summary of a run directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub dir: PathBuf,
    #[arg(long)]
    pub source: Option<String>,
    /// Keep byte-identical duplicates.
    #[arg(long)]
    pub no_dedup: bool,
    /// Keep a seeded uniform sample of this many records.
    #[arg(long)]
    pub sample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, conflicts_with = "random_weights")]
    pub weights: Option<PathBuf>,
    /// Seeded random weights instead of a weight file.
    #[arg(long)]
    pub random_weights: bool,
    #[arg(long)]
    pub no_normalize: bool,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long)]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    pub num_layers: Option<usize>,
    #[arg(long)]
    pub num_heads: Option<usize>,
    #[arg(long)]
    pub mlp_dim: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct LayoutArgs {
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub n_neighbors: Option<usize>,
    #[arg(long)]
    pub min_dist: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    #[command(flatten)]
    pub layout: LayoutArgs,
}

#[derive(Debug, Args, Default)]
pub struct KMeansArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_init: Option<usize>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Stores to score; each pairs with the `--labels` at the same position.
    #[arg(long, required = true)]
    pub store: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub labels: Vec<PathBuf>,
    /// Estimate the silhouette on a seeded subsample of this size.
    #[arg(long)]
    pub silhouette_sample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    #[command(flatten)]
    pub kmeans: KMeansArgs,
    #[command(flatten)]
    pub layout: LayoutArgs,
    #[arg(long)]
    pub silhouette_sample: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RepresentativesArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub projection: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Record ids to mark with a ring.
    #[arg(long, value_delimiter = ',')]
    pub highlight: Option<Vec<u64>>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Run directory to summarize; defaults to `--out`.
    #[arg(long)]
    pub run: Option<PathBuf>,
    #[arg(long)]
    pub m: Option<usize>,
}

fn put<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

impl LayoutArgs {
    fn apply(&self, s: &mut Settings) {
        put(&mut s.method, self.method);
        put(&mut s.n_neighbors, self.n_neighbors);
        put(&mut s.min_dist, self.min_dist);
        put(&mut s.epochs, self.epochs);
    }
}

impl KMeansArgs {
    fn apply(&self, s: &mut Settings) {
        put(&mut s.k, self.k);
        put(&mut s.n_init, self.n_init);
        put(&mut s.max_iter, self.max_iter);
        put(&mut s.tol, self.tol);
    }
}

impl Cli {
    /// Layers this invocation's flags over `s`.
    pub fn apply(&self, s: &mut Settings) {
        put(&mut s.seed, self.seed);
        if self.threads.is_some() {
            s.threads = self.threads;
        }
        match &self.command {
            Command::Ingest(a) => {
                put(&mut s.source, a.source.clone());
                if a.no_dedup {
                    s.dedup = false;
                }
                if a.sample.is_some() {
                    s.sample = a.sample;
                }
            }
            Command::Embed(a) => {
                if a.weights.is_some() {
                    s.weights = a.weights.clone();
                    s.random_weights = false;
                }
                if a.random_weights {
                    s.random_weights = true;
                    s.weights = None;
                }
                if a.no_normalize {
                    s.normalize = false;
                }
                put(&mut s.model.image_size, a.image_size);
                put(&mut s.model.patch_size, a.patch_size);
                put(&mut s.model.hidden_dim, a.hidden_dim);
                put(&mut s.model.num_layers, a.num_layers);
                put(&mut s.model.num_heads, a.num_heads);
                put(&mut s.model.mlp_dim, a.mlp_dim);
            }
            Command::Reduce(a) => {
                put(&mut s.dim, a.dim);
                a.layout.apply(s);
            }
            Command::Cluster(a) => a.kmeans.apply(s),
            Command::Metrics(a) => {
                if a.silhouette_sample.is_some() {
                    s.silhouette_sample = a.silhouette_sample;
                }
            }
            Command::Sweep(a) => {
                put(&mut s.dims, a.dims.clone());
                a.kmeans.apply(s);
                a.layout.apply(s);
                if a.silhouette_sample.is_some() {
                    s.silhouette_sample = a.silhouette_sample;
                }
            }
            Command::Representatives(a) => put(&mut s.m, a.m),
            Command::Plot(a) => {
                put(&mut s.highlight, a.highlight.clone());
                put(&mut s.width, a.width);
                put(&mut s.height, a.height);
                put(&mut s.radius, a.radius);
            }
            Command::Report(a) => put(&mut s.m, a.m),
        }
    }
}
