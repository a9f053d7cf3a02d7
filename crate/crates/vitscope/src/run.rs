//! Run manifests, output-directory locking and input-hash caching.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::sha256_hex;
use crate::error::{Error, Result};
use crate::store::write_atomic;

pub const LOCK_FILE: &str = ".vitscope.lock";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRef {
    pub path: String,
    pub sha256: String,
}

impl FileRef {
    pub fn of(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(Error::io(path))?;
        Ok(Self {
            path: path.to_string_lossy().into_owned(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Everything needed to reproduce one stage's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileRef>,
    pub outputs: Vec<FileRef>,
    pub seeds: BTreeMap<String, u64>,
    pub duration_ms: u64,
}

impl RunManifest {
    /// True when this manifest describes the same stage, configuration and
    /// inputs, and every recorded output is still on disk unchanged.
    pub fn is_current(&self, subcommand: &str, config: &serde_json::Value, inputs: &[FileRef]) -> bool {
        self.version == env!("CARGO_PKG_VERSION")
            && self.subcommand == subcommand
            && &self.config == config
            && self.inputs == inputs
            && !self.outputs.is_empty()
            && self
                .outputs
                .iter()
                .all(|o| FileRef::of(Path::new(&o.path)).is_ok_and(|now| now == *o))
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(Error::io(dir))?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path)(e)),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// One invocation of a stage writing into `out`.
pub struct Stage<'a> {
    pub out: &'a Path,
    pub subcommand: &'a str,
    /// File name of the run manifest, unique per primary output.
    pub manifest_name: String,
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub seeds: BTreeMap<String, u64>,
    pub force: bool,
}

pub enum Outcome {
    Ran(RunManifest),
    Cached(RunManifest),
}

impl Outcome {
    pub fn manifest(&self) -> &RunManifest {
        match self {
            Outcome::Ran(m) | Outcome::Cached(m) => m,
        }
    }
}

impl Stage<'_> {
    pub fn manifest_path(&self) -> PathBuf {
        self.out.join(&self.manifest_name)
    }

    /// Runs `body` under the directory lock unless a current manifest shows
    /// the outputs are already up to date. `body` returns the files it wrote.
    pub fn run(self, body: impl FnOnce() -> Result<Vec<PathBuf>>) -> Result<Outcome> {
        let _lock = DirLock::acquire(self.out)?;
        let inputs = self.inputs.iter().map(|p| FileRef::of(p)).collect::<Result<Vec<_>>>()?;
        let manifest_path = self.manifest_path();
        if !self.force {
            if let Ok(text) = fs::read_to_string(&manifest_path) {
                if let Ok(previous) = serde_json::from_str::<RunManifest>(&text) {
                    if previous.is_current(self.subcommand, &self.config, &inputs) {
                        log::info!("{} is up to date", manifest_path.display());
                        return Ok(Outcome::Cached(previous));
                    }
                }
            }
        }
        let start = Instant::now();
        let written = body()?;
        let outputs = written.iter().map(|p| FileRef::of(p)).collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            subcommand: self.subcommand.into(),
            config: self.config,
            inputs,
            outputs,
            seeds: self.seeds,
            duration_ms: start.elapsed().as_millis() as u64,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Internal(e.to_string()))?;
        text.push('\n');
        write_atomic(&manifest_path, text.as_bytes()).map_err(Error::io(&manifest_path))?;
        Ok(Outcome::Ran(manifest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let first = DirLock::acquire(dir.path()).unwrap();
        assert!(matches!(DirLock::acquire(dir.path()), Err(Error::Locked(_))));
        drop(first);
        DirLock::acquire(dir.path()).unwrap();
    }

    #[test]
    fn second_identical_run_is_cached() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        fs::write(&input, "x").unwrap();
        let stage = || Stage {
            out: dir.path(),
            subcommand: "test",
            manifest_name: "test.run.json".into(),
            config: serde_json::json!({"k": 1}),
            inputs: vec![input.clone()],
            seeds: BTreeMap::new(),
            force: false,
        };
        let out = dir.path().join("out.txt");
        let body = || {
            fs::write(&out, "y").unwrap();
            Ok(vec![out.clone()])
        };
        assert!(matches!(stage().run(body).unwrap(), Outcome::Ran(_)));
        assert!(matches!(stage().run(body).unwrap(), Outcome::Cached(_)));
        fs::write(&input, "changed").unwrap();
        assert!(matches!(stage().run(body).unwrap(), Outcome::Ran(_)));
    }
}
