//! Markdown summary of a run directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::results::{ClusterModelFile, RepresentativesFile, CLUSTER_MODEL, METRICS_TXT, REPRESENTATIVES, SCATTER};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error("missing {stage} output {path}")]
    Missing { stage: &'static str, path: PathBuf },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

fn read_json<T: for<'de> serde::Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<T, ReportError> {
    let text = fs::read_to_string(path).map_err(|_| ReportError::Missing {
        stage,
        path: path.to_path_buf(),
    })?;
    serde_json::from_str(&text).map_err(|e| ReportError::Invalid {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Builds the report from the files in `run_dir`, listing at most `m`
/// representatives per cluster.
pub fn render_report(run_dir: &Path, m: usize) -> Result<String, ReportError> {
    let model: ClusterModelFile = read_json(&run_dir.join(CLUSTER_MODEL), "cluster")?;
    let reps: RepresentativesFile = read_json(&run_dir.join(REPRESENTATIVES), "representatives")?;
    if reps.clusters.len() != model.k {
        return Err(ReportError::Invalid {
            path: run_dir.join(REPRESENTATIVES),
            reason: format!("{} clusters listed, model has k = {}", reps.clusters.len(), model.k),
        });
    }
    let metrics = fs::read_to_string(run_dir.join(METRICS_TXT)).ok();
    let has_scatter = run_dir.join(SCATTER).is_file();

    let n: usize = model.sizes.iter().sum();
    let total_inertia: f64 = model.cluster_inertia.iter().sum();
    let share = |part: f64, whole: f64| if whole > 0.0 { 100.0 * part / whole } else { 0.0 };

    let mut out = String::new();
    let _ = writeln!(out, "# Cluster report\n");
    let _ = writeln!(
        out,
        "{n} points, k = {}, {}-dimensional clustering space, inertia {:.6}, seed {}.\n",
        model.k, model.d, model.inertia, model.seed
    );
    let _ = writeln!(out, "## Metrics\n");
    match metrics {
        Some(table) => {
            let _ = writeln!(out, "```text\n{}```\n", table);
        }
        None => {
            let _ = writeln!(out, "No metrics table in this run.\n");
        }
    }
    if has_scatter {
        let _ = writeln!(out, "## Scatter\n\n![cluster scatter]({SCATTER})\n");
    }
    let _ = writeln!(out, "## Clusters");
    for (c, entry) in reps.clusters.iter().enumerate() {
        let size = model.sizes.get(c).copied().unwrap_or(0);
        let inertia = model.cluster_inertia.get(c).copied().unwrap_or(0.0);
        let _ = writeln!(out, "\n### Cluster {}\n", entry.cluster);
        let _ = writeln!(out, "- size: {size} ({:.1}% of points)", share(size as f64, n as f64));
        let _ = writeln!(out, "- inertia share: {:.1}%", share(inertia, total_inertia));
        let listed: Vec<_> = entry.members.iter().take(m.min(size)).collect();
        let _ = writeln!(out, "- representatives: {}\n", listed.len());
        for (rank, r) in listed.iter().enumerate() {
            let _ = writeln!(
                out,
                "{}. `{}` (record {}, distance {:.4})",
                rank + 1,
                r.image_path,
                r.record_id,
                r.distance
            );
        }
    }
    Ok(out)
}
