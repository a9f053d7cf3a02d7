//! The pipeline stages behind each subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::json;
use vitscope_core::clustering::{fit, representatives};
use vitscope_core::metrics::{format_table, MetricsRow, RowResult, SilhouetteMode};
use vitscope_core::reduction::{pca, umap};
use vitscope_core::vit::{forward, normalize};
use vitscope_core::{Matrix, ModelWeights, Projection};

use crate::cli::{Cli, Command};
use crate::corpus::{self, sha256_hex, Manifest};
use crate::error::{Error, Result};
use crate::plot::{render_svg, ScatterSpec};
use crate::preprocess::{prepare, DecodeError};
use crate::report::render_report;
use crate::results::*;
use crate::run::{Outcome, Stage};
use crate::settings::{Method, Settings};
use crate::store::{self, read_jsonl, read_store, sidecar_path, write_atomic, EmbeddingMatrix, PostRecord};
use crate::weights_io::read_weights;

pub const MANIFEST: &str = "manifest.json";
pub const EMBEDDINGS: &str = "embeddings.embs";

pub fn projection_name(dim: usize) -> String {
    format!("projection-{dim}.embs")
}

/// Resolves settings for `cli` and runs its subcommand.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.apply_file(path)?;
    }
    cli.apply(&mut settings);
    if let Some(n) = settings.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        // A second initialization in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = cli.out.as_path();
    let s = &settings;
    match &cli.command {
        Command::Ingest(a) => ingest(out, &a.dir, s),
        Command::Embed(a) => embed(out, &a.manifest, s, cli.force),
        Command::Reduce(a) => reduce(out, &a.store, s, cli.force),
        Command::Cluster(a) => cluster(out, &a.store, s, cli.force),
        Command::Metrics(a) => metrics(out, &a.store, &a.labels, s, cli.force),
        Command::Sweep(a) => sweep(out, &a.store, s, cli.force),
        Command::Representatives(a) => representatives_cmd(out, &a.store, &a.model, s, cli.force),
        Command::Plot(a) => plot(out, &a.projection, &a.labels, s, cli.force),
        Command::Report(a) => report(out, a.run.as_deref().unwrap_or(out), s, cli.force),
    }
}

fn config_json(s: &Settings) -> serde_json::Value {
    serde_json::to_value(s).expect("settings serialize")
}

fn seeds(s: &Settings, names: &[&str]) -> BTreeMap<String, u64> {
    names.iter().map(|n| (n.to_string(), s.seed)).collect()
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes()).map_err(Error::io(path))
}

fn write_jsonl<T: serde::Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Internal(e.to_string()))?;
        out.push(b'\n');
    }
    write_atomic(path, &out).map_err(Error::io(path))
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn store_inputs(path: &Path) -> Vec<PathBuf> {
    vec![path.to_path_buf(), sidecar_path(path)]
}

fn projection_matrix(p: Projection, records: Vec<PostRecord>) -> (EmbeddingMatrix, Vec<PostRecord>) {
    (
        EmbeddingMatrix {
            data: p.0.to_f32(),
            normalized: false,
        },
        records,
    )
}

pub fn ingest(out: &Path, dir: &Path, s: &Settings) -> Result<Outcome> {
    let stage = Stage {
        out,
        subcommand: "ingest",
        manifest_name: "manifest.run.json".into(),
        config: config_json(s),
        inputs: Vec::new(),
        seeds: seeds(s, &["sample"]),
        // The directory listing is the input, so there is nothing to cache on.
        force: true,
    };
    stage.run(|| {
        let (mut manifest, skipped) = corpus::ingest(dir, &s.source)?;
        if !skipped.is_empty() {
            log::warn!("skipped {} undecodable files", skipped.len());
        }
        if s.dedup {
            manifest = corpus::deduplicate(&manifest);
        }
        if let Some(n) = s.sample {
            manifest = corpus::sample(&manifest, n, s.seed)?;
        }
        let path = out.join(MANIFEST);
        write_json(&path, &manifest)?;
        Ok(vec![path])
    })
}

fn load_weights(s: &Settings) -> Result<(ModelWeights, Vec<PathBuf>)> {
    match (&s.weights, s.random_weights) {
        (Some(path), _) => Ok((read_weights(path)?, vec![path.clone()])),
        (None, true) => Ok((ModelWeights::random(s.model, s.seed)?, Vec::new())),
        (None, false) => Err(Error::Usage("embed needs --weights <file> or --random-weights".into())),
    }
}

pub fn embed(out: &Path, manifest_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let (weights, weight_inputs) = load_weights(s)?;
    let mut inputs = vec![manifest_path.to_path_buf()];
    inputs.extend(weight_inputs);
    let stage = Stage {
        out,
        subcommand: "embed",
        manifest_name: "embeddings.run.json".into(),
        config: config_json(s),
        inputs,
        seeds: if s.random_weights { seeds(s, &["weights"]) } else { BTreeMap::new() },
        force,
    };
    stage.run(|| {
        let manifest: Manifest = read_json(manifest_path)?;
        let size = weights.config.image_size as u32;
        let rows: Vec<Result<Vec<f32>>> = manifest
            .records
            .par_iter()
            .map(|r| {
                let path = Path::new(&r.image_path);
                let bytes = fs::read(path).map_err(Error::io(path))?;
                if sha256_hex(&bytes) != r.content_hash {
                    return Err(Error::Format {
                        path: path.to_path_buf(),
                        reason: "content changed since ingest".into(),
                    });
                }
                let decoded = image::load_from_memory(&bytes).map_err(|e| DecodeError::Decode {
                    path: path.to_path_buf(),
                    reason: e.to_string(),
                })?;
                let tensor = prepare(&decoded.to_rgb8(), size).map_err(|source| DecodeError::Invalid {
                    path: path.to_path_buf(),
                    source,
                })?;
                let e = forward(&tensor, &weights)?;
                Ok(if s.normalize { normalize(&e).values } else { e.values })
            })
            .collect();
        let d = weights.config.hidden_dim;
        let mut data = Vec::with_capacity(rows.len() * d);
        let mut all_normalized = s.normalize;
        for row in rows {
            let row = row?;
            if s.normalize {
                let norm = row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
                all_normalized &= (norm - 1.0).abs() <= 1e-6;
            }
            data.extend(row);
        }
        let matrix = EmbeddingMatrix {
            data: Matrix::from_vec(manifest.len(), d, data).map_err(|e| Error::Internal(e.to_string()))?,
            normalized: all_normalized,
        };
        let path = out.join(EMBEDDINGS);
        store::write_store(&path, &matrix, &manifest.records)?;
        Ok(vec![path.clone(), sidecar_path(&path)])
    })
}

fn project(x: &Matrix<f64>, dim: usize, s: &Settings) -> Result<Projection> {
    Ok(match s.method {
        Method::Umap => umap(x, &s.layout(dim))?,
        Method::Pca => pca(x, dim)?.0,
    })
}

pub fn reduce(out: &Path, store_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let name = projection_name(s.dim);
    let stage = Stage {
        out,
        subcommand: "reduce",
        manifest_name: name.replace(".embs", ".run.json"),
        config: config_json(s),
        inputs: store_inputs(store_path),
        seeds: seeds(s, &["layout"]),
        force,
    };
    stage.run(|| {
        let (matrix, records) = read_store(store_path)?;
        let projection = project(&matrix.data.to_f64(), s.dim, s)?;
        let (m, records) = projection_matrix(projection, records);
        let path = out.join(&name);
        store::write_store(&path, &m, &records)?;
        Ok(vec![path.clone(), sidecar_path(&path)])
    })
}

fn cluster_outputs(dir: &Path, x: &Matrix<f64>, records: &[PostRecord], s: &Settings) -> Result<(Vec<usize>, Vec<PathBuf>)> {
    let config = s.kmeans();
    let model = fit(x, &config)?;
    let file = ClusterModelFile::new(&model, x, &config);
    let model_path = dir.join(CLUSTER_MODEL);
    write_json(&model_path, &file)?;
    let rows: Vec<Assignment> = records
        .iter()
        .zip(&model.assignments)
        .map(|(r, &cluster)| Assignment {
            record: r.clone(),
            cluster,
        })
        .collect();
    let assign_path = dir.join(ASSIGNMENTS);
    write_jsonl(&assign_path, &rows)?;
    Ok((model.assignments, vec![model_path, assign_path]))
}

pub fn cluster(out: &Path, store_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let stage = Stage {
        out,
        subcommand: "cluster",
        manifest_name: "cluster_model.run.json".into(),
        config: config_json(s),
        inputs: store_inputs(store_path),
        seeds: seeds(s, &["kmeans"]),
        force,
    };
    stage.run(|| {
        let (matrix, records) = read_store(store_path)?;
        Ok(cluster_outputs(out, &matrix.data.to_f64(), &records, s)?.1)
    })
}

fn silhouette_mode(s: &Settings) -> SilhouetteMode {
    match s.silhouette_sample {
        Some(size) => SilhouetteMode::Subsampled { size, seed: s.seed },
        None => SilhouetteMode::Exact,
    }
}

/// Labels from an assignments file, checked row by row against the store.
pub fn aligned_labels(records: &[PostRecord], labels_path: &Path) -> Result<Vec<usize>> {
    let assignments: Vec<Assignment> = read_jsonl(labels_path)?;
    if assignments.len() != records.len() {
        return Err(Error::Alignment(format!(
            "{} has {} labels for {} store rows",
            labels_path.display(),
            assignments.len(),
            records.len()
        )));
    }
    for (row, (a, r)) in assignments.iter().zip(records).enumerate() {
        if a.record.record_id != r.record_id {
            return Err(Error::Alignment(format!(
                "{} row {row} is record {} but the store has record {}",
                labels_path.display(),
                a.record.record_id,
                r.record_id
            )));
        }
    }
    Ok(assignments.into_iter().map(|a| a.cluster).collect())
}

fn number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(if v > 0.0 { "inf" } else { "-inf" })
    }
}

fn metrics_json<E: std::fmt::Display>(rows: &[RowResult<E>], mode: SilhouetteMode) -> serde_json::Value {
    let rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|(dim, r)| match r {
            Ok(m) => json!({
                "dim": dim,
                "silhouette": number(m.silhouette),
                "calinski_harabasz": number(m.calinski_harabasz),
                "davies_bouldin": number(m.davies_bouldin),
            }),
            Err(e) => json!({"dim": dim, "error": e.to_string()}),
        })
        .collect();
    json!({"silhouette": mode, "rows": rows})
}

fn write_metrics<E: std::fmt::Display>(out: &Path, rows: &[RowResult<E>], mode: SilhouetteMode) -> Result<Vec<PathBuf>> {
    let txt = out.join(METRICS_TXT);
    write_atomic(&txt, format_table(rows).as_bytes()).map_err(Error::io(&txt))?;
    let js = out.join(METRICS_JSON);
    write_json(&js, &metrics_json(rows, mode))?;
    Ok(vec![txt, js])
}

pub fn metrics(out: &Path, stores: &[PathBuf], labels: &[PathBuf], s: &Settings, force: bool) -> Result<Outcome> {
    if stores.len() != labels.len() {
        return Err(Error::Usage(format!(
            "{} --store values but {} --labels values",
            stores.len(),
            labels.len()
        )));
    }
    let mut inputs = Vec::new();
    for (st, lb) in stores.iter().zip(labels) {
        inputs.extend(store_inputs(st));
        inputs.push(lb.clone());
    }
    let mode = silhouette_mode(s);
    let stage = Stage {
        out,
        subcommand: "metrics",
        manifest_name: "metrics.run.json".into(),
        config: config_json(s),
        inputs,
        seeds: seeds(s, &["silhouette"]),
        force,
    };
    stage.run(|| {
        let mut loaded = Vec::new();
        for (st, lb) in stores.iter().zip(labels) {
            let (matrix, records) = read_store(st)?;
            let y = aligned_labels(&records, lb)?;
            loaded.push((matrix.dim(), matrix.data.to_f64(), y));
        }
        let mut rows: Vec<RowResult> = loaded
            .iter()
            .map(|(dim, x, y)| (*dim, MetricsRow::compute(*dim, x, y, mode)))
            .collect();
        rows.sort_by_key(|r| r.0);
        write_metrics(out, &rows, mode)
    })
}

pub fn sweep(out: &Path, store_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    if s.dims.is_empty() {
        return Err(Error::Usage("--dims needs at least one dimension".into()));
    }
    let mode = silhouette_mode(s);
    let stage = Stage {
        out,
        subcommand: "sweep",
        manifest_name: "sweep.run.json".into(),
        config: config_json(s),
        inputs: store_inputs(store_path),
        seeds: seeds(s, &["layout", "kmeans", "silhouette"]),
        force,
    };
    stage.run(|| {
        let (matrix, records) = read_store(store_path)?;
        let x = matrix.data.to_f64();
        let mut written = Vec::new();
        let mut rows: Vec<RowResult<Error>> = Vec::new();
        let mut dims = s.dims.clone();
        dims.sort_unstable();
        dims.dedup();
        for &dim in &dims {
            let dir = out.join(format!("dim-{dim}"));
            fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
            let result = (|| -> Result<MetricsRow> {
                let projection = project(&x, dim, s)?;
                let (m, recs) = projection_matrix(projection, records.clone());
                let path = dir.join("projection.embs");
                store::write_store(&path, &m, &recs)?;
                written.push(path.clone());
                written.push(sidecar_path(&path));
                let y = m.data.to_f64();
                let (labels, files) = cluster_outputs(&dir, &y, &recs, s)?;
                written.extend(files);
                Ok(MetricsRow::compute(dim, &y, &labels, mode)?)
            })();
            if let Err(e) = &result {
                log::warn!("dimension {dim}: {e}");
            }
            rows.push((dim, result));
        }
        written.extend(write_metrics(out, &rows, mode)?);
        Ok(written)
    })
}

pub fn representatives_cmd(out: &Path, store_path: &Path, model_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let mut inputs = store_inputs(store_path);
    inputs.push(model_path.to_path_buf());
    let stage = Stage {
        out,
        subcommand: "representatives",
        manifest_name: "representatives.run.json".into(),
        config: config_json(s),
        inputs,
        seeds: BTreeMap::new(),
        force,
    };
    stage.run(|| {
        let (matrix, records) = read_store(store_path)?;
        let model: ClusterModelFile = read_json(model_path)?;
        let centroids = model.centroid_matrix().ok_or_else(|| Error::Format {
            path: model_path.to_path_buf(),
            reason: format!("{} centroid values for k = {}, d = {}", model.centroids.len(), model.k, model.d),
        })?;
        let x = matrix.data.to_f64();
        let assignments = vitscope_core::clustering::predict(&centroids, &x)?;
        let ids: Vec<u64> = records.iter().map(|r| r.record_id).collect();
        let entry = |n: &vitscope_core::clustering::Neighbor, row: usize| RepresentativeEntry {
            record_id: n.record_id,
            row,
            image_path: records[row].image_path.clone(),
            distance: n.distance,
            cluster: assignments[row],
        };
        let nearest = representatives(&x, &ids, &centroids, s.m)?;
        let mut clusters = Vec::with_capacity(model.k);
        for (c, near) in nearest.per_cluster.iter().enumerate() {
            let members: Vec<usize> = (0..x.rows()).filter(|&i| assignments[i] == c).collect();
            let sub = Matrix::from_rows(x.cols(), members.iter().map(|&i| x.row(i))).expect("uniform rows");
            let sub_ids: Vec<u64> = members.iter().map(|&i| ids[i]).collect();
            let centroid = Matrix::from_rows(x.cols(), [centroids.row(c)]).expect("one row");
            let own = representatives(&sub, &sub_ids, &centroid, s.m)?;
            clusters.push(ClusterRepresentatives {
                cluster: c,
                size: members.len(),
                nearest: near.iter().map(|n| entry(n, n.row)).collect(),
                members: own.per_cluster[0].iter().map(|n| entry(n, members[n.row])).collect(),
            });
        }
        let path = out.join(REPRESENTATIVES);
        write_json(&path, &RepresentativesFile { m: s.m, clusters })?;
        Ok(vec![path])
    })
}

pub fn plot(out: &Path, projection: &Path, labels_path: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let mut inputs = store_inputs(projection);
    inputs.push(labels_path.to_path_buf());
    let stage = Stage {
        out,
        subcommand: "plot",
        manifest_name: "scatter.run.json".into(),
        config: config_json(s),
        inputs,
        seeds: BTreeMap::new(),
        force,
    };
    stage.run(|| {
        let (matrix, records) = read_store(projection)?;
        if matrix.dim() != 2 {
            return Err(crate::plot::PlotError::Dimension { found: matrix.dim() }.into());
        }
        let labels = aligned_labels(&records, labels_path)?;
        let ids: Vec<u64> = records.iter().map(|r| r.record_id).collect();
        let spec = ScatterSpec {
            width: s.width,
            height: s.height,
            radius: s.radius,
            palette: s.palette.clone(),
            highlight: s.highlight.iter().copied().collect(),
        };
        let svg = render_svg(&matrix.data.to_f64(), &labels, &ids, &spec)?;
        let path = out.join(SCATTER);
        write_atomic(&path, svg.as_bytes()).map_err(Error::io(&path))?;
        Ok(vec![path])
    })
}

pub fn report(out: &Path, run_dir: &Path, s: &Settings, force: bool) -> Result<Outcome> {
    let inputs: Vec<PathBuf> = [CLUSTER_MODEL, REPRESENTATIVES, METRICS_TXT, SCATTER]
        .iter()
        .map(|f| run_dir.join(f))
        .filter(|p| p.is_file())
        .collect();
    let stage = Stage {
        out,
        subcommand: "report",
        manifest_name: "report.run.json".into(),
        config: config_json(s),
        inputs,
        seeds: BTreeMap::new(),
        force,
    };
    stage.run(|| {
        let text = render_report(run_dir, s.m)?;
        let path = out.join(REPORT);
        write_atomic(&path, text.as_bytes()).map_err(Error::io(&path))?;
        Ok(vec![path])
    })
}
