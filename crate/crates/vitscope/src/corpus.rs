//! Image corpus manifests: ingestion, exact de-duplication and sampling.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vitscope_core::seeded_rng;

use crate::store::PostRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub records: Vec<PostRecord>,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub created: u64,
    /// Set once every content hash is known to be distinct.
    pub dedup: bool,
}

impl Manifest {
    pub fn new(records: Vec<PostRecord>) -> Self {
        Self {
            records,
            created: timestamp(),
            dedup: false,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

pub fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return v;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read {path}: {source}")]
pub struct IngestError {
    pub path: PathBuf,
    pub source: io::Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skipped {
    pub path: PathBuf,
    pub reason: String,
}

/// One record per decodable image under `dir` (recursively), in path
/// order. Record ids count from 0 in that order.
pub fn ingest(dir: &Path, source: &str) -> Result<(Manifest, Vec<Skipped>), IngestError> {
    fs::read_dir(dir).map_err(|source| IngestError {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| IngestError {
            path: e.path().unwrap_or(dir).to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() {
            files.push(entry.into_path());
        }
    }
    files.sort();

    let checked: Vec<Result<(PathBuf, String), Skipped>> = files
        .into_par_iter()
        .map(|path| {
            let bytes = fs::read(&path).map_err(|e| Skipped {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            image::load_from_memory(&bytes).map_err(|e| Skipped {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            Ok((path, sha256_hex(&bytes)))
        })
        .collect();

    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for item in checked {
        match item {
            Ok((path, content_hash)) => records.push(PostRecord {
                record_id: records.len() as u64,
                source: source.to_string(),
                image_path: path.to_string_lossy().into_owned(),
                content_hash,
            }),
            Err(skip) => {
                log::warn!("skipping {}: {}", skip.path.display(), skip.reason);
                skipped.push(skip);
            }
        }
    }
    Ok((Manifest::new(records), skipped))
}

/// Keeps the first record per content hash, in the original order.
pub fn deduplicate(m: &Manifest) -> Manifest {
    let mut seen = HashSet::new();
    let records = m
        .records
        .iter()
        .filter(|r| seen.insert(r.content_hash.clone()))
        .cloned()
        .collect();
    Manifest {
        records,
        created: m.created,
        dedup: true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot sample {requested} records from a manifest of {available}")]
pub struct SampleError {
    pub requested: usize,
    pub available: usize,
}

/// Uniform sample of `n` records without replacement, in manifest order.
pub fn sample(m: &Manifest, n: usize, seed: u64) -> Result<Manifest, SampleError> {
    if n > m.len() {
        return Err(SampleError {
            requested: n,
            available: m.len(),
        });
    }
    let mut rng = seeded_rng(seed, 0);
    let mut picked = index::sample(&mut rng, m.len(), n).into_vec();
    picked.sort_unstable();
    Ok(Manifest {
        records: picked.into_iter().map(|i| m.records[i].clone()).collect(),
        created: m.created,
        dedup: m.dedup,
    })
}
