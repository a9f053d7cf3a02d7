//! Helpers shared by the CLI-level tests: running the binary, writing
//! synthetic stores and image corpora.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{Rgb, RgbImage};
use rand::Rng;
use vitscope::results::Assignment;
use vitscope::store::{read_jsonl, write_store, EmbeddingMatrix, PostRecord};
use vitscope_core::{seeded_rng, Matrix};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_vitscope")
}

/// Runs the binary with `--out <out>` prepended to `args`.
pub fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .arg("--out")
        .arg(out)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn vitscope")
}

/// Like [`run`], but fails with the captured stderr on a non-zero exit.
pub fn run_ok(out: &Path, args: &[&str]) -> Output {
    let output = run(out, args);
    assert!(
        output.status.success(),
        "vitscope {args:?} exited with {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    output
}

/// The JSON error object printed on stderr.
pub fn stderr_json(output: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&output.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON on stderr: {text}"));
    serde_json::from_str(line).unwrap()
}

pub fn records(n: usize) -> Vec<PostRecord> {
    (0..n)
        .map(|i| PostRecord {
            record_id: i as u64,
            source: "synthetic".into(),
            image_path: format!("img/{i:04}.png"),
            content_hash: format!("{i:064x}"),
        })
        .collect()
}

/// Writes `x` as an unnormalized store with sequential record ids.
pub fn write_matrix_store(path: &Path, x: &Matrix<f64>) -> Vec<PostRecord> {
    let recs = records(x.rows());
    let matrix = EmbeddingMatrix {
        data: x.to_f32(),
        normalized: false,
    };
    write_store(path, &matrix, &recs).unwrap();
    recs
}

pub fn read_assignments(path: &Path) -> Vec<usize> {
    read_jsonl::<Assignment>(path).unwrap().into_iter().map(|a| a.cluster).collect()
}

/// A small noise image; distinct seeds give distinct bytes.
pub fn noise_png(path: &Path, seed: u64) {
    let mut rng = seeded_rng(seed, 21);
    let (w, h) = (rng.random_range(20..48), rng.random_range(20..48));
    let img = RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]));
    img.save(path).unwrap();
}

/// `distinct` noise images plus `copies` byte-identical copies of some of
/// them under other names. Returns the paths of the distinct files.
pub fn png_corpus(dir: &Path, distinct: usize, copies: usize, seed: u64) -> Vec<PathBuf> {
    fs::create_dir_all(dir).unwrap();
    let originals: Vec<PathBuf> = (0..distinct)
        .map(|i| {
            let p = dir.join(format!("img-{i:04}.png"));
            noise_png(&p, seed * 10_000 + i as u64);
            p
        })
        .collect();
    let mut rng = seeded_rng(seed, 22);
    for c in 0..copies {
        let src = &originals[rng.random_range(0..distinct)];
        fs::copy(src, dir.join(format!("copy-{c:04}.png"))).unwrap();
    }
    originals
}
