//! Embedding store: a binary matrix plus a JSON-lines provenance sidecar.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! b"EMBS0001"
//! u32   rows
//! u32   dim
//! u8    normalized flag (0 or 1)
//! f32 x rows x dim, row-major
//! ```
//!
//! The sidecar sits next to the store with extension `.jsonl` and holds one
//! [`PostRecord`] per row, in row order. Reduced projections use the same
//! format with `dim` set to the target dimension.

use std::fs;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use vitscope_core::Matrix;

pub const MAGIC: &[u8; 8] = b"EMBS0001";
const HEADER_LEN: usize = 17;
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub record_id: u64,
    pub source: String,
    pub image_path: String,
    /// Hex SHA-256 of the raw file bytes.
    pub content_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub data: Matrix<f32>,
    pub normalized: bool,
}

impl EmbeddingMatrix {
    pub fn rows(&self) -> usize {
        self.data.rows()
    }

    pub fn dim(&self) -> usize {
        self.data.cols()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: corrupt header: {reason}")]
    CorruptHeader { path: PathBuf, reason: String },
    #[error("{path}: truncated payload: expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: u64, found: u64 },
    #[error("{rows} matrix rows but {records} sidecar records")]
    Alignment { rows: usize, records: usize },
    #[error("{path}: line {line}: {reason}")]
    Sidecar { path: PathBuf, line: usize, reason: String },
    #[error("row {row}: {reason}")]
    InvalidRow { row: usize, reason: &'static str },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sidecar_path(store: &Path) -> PathBuf {
    store.with_extension("jsonl")
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn encode_matrix(matrix: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.data.as_slice().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.dim() as u32).to_le_bytes());
    out.push(u8::from(matrix.normalized));
    for v in matrix.data.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_matrix(path: &Path, bytes: &[u8]) -> Result<EmbeddingMatrix, StoreError> {
    let corrupt = |reason: &str| StoreError::CorruptHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN {
        return Err(corrupt("file shorter than header"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let normalized = match bytes[16] {
        0 => false,
        1 => true,
        _ => return Err(corrupt("normalized flag is neither 0 nor 1")),
    };
    if rows > 0 && dim == 0 {
        return Err(corrupt("zero dimension with non-empty rows"));
    }
    let expected = rows as u64 * dim as u64 * 4;
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < expected {
        return Err(StoreError::Truncated {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    if found > expected {
        return Err(corrupt("payload longer than the header declares"));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(EmbeddingMatrix {
        data: Matrix::from_vec(rows, dim, data).expect("length checked"),
        normalized,
    })
}

fn validate(matrix: &EmbeddingMatrix, records: &[PostRecord]) -> Result<(), StoreError> {
    if matrix.rows() != records.len() {
        return Err(StoreError::Alignment {
            rows: matrix.rows(),
            records: records.len(),
        });
    }
    for (row, values) in matrix.data.iter_rows().enumerate() {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StoreError::InvalidRow {
                row,
                reason: "non-finite value",
            });
        }
        if matrix.normalized {
            let norm = values.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(StoreError::InvalidRow {
                    row,
                    reason: "flagged normalized but not unit norm",
                });
            }
        }
    }
    Ok(())
}

pub fn encode_sidecar(records: &[PostRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("serializable");
        out.push(b'\n');
    }
    out
}

/// Parses a JSON-lines file into `T`, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, StoreError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| StoreError::Sidecar {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Writes the store and its sidecar, each atomically.
pub fn write_store(path: &Path, matrix: &EmbeddingMatrix, records: &[PostRecord]) -> Result<(), StoreError> {
    validate(matrix, records)?;
    write_atomic(path, &encode_matrix(matrix)).map_err(io_err(path))?;
    let sidecar = sidecar_path(path);
    write_atomic(&sidecar, &encode_sidecar(records)).map_err(io_err(&sidecar))?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<EmbeddingMatrix, StoreError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_matrix(path, &bytes)
}

pub fn read_store(path: &Path) -> Result<(EmbeddingMatrix, Vec<PostRecord>), StoreError> {
    let matrix = read_matrix(path)?;
    let records: Vec<PostRecord> = read_jsonl(&sidecar_path(path))?;
    if records.len() != matrix.rows() {
        return Err(StoreError::Alignment {
            rows: matrix.rows(),
            records: records.len(),
        });
    }
    Ok((matrix, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: u64) -> PostRecord {
        PostRecord {
            record_id: id,
            source: "test".into(),
            image_path: format!("img/{id}.png"),
            content_hash: format!("{id:064x}"),
        }
    }

    #[test]
    fn empty_store_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.embs");
        let m = EmbeddingMatrix {
            data: Matrix::zeros(0, 768),
            normalized: true,
        };
        write_store(&path, &m, &[]).unwrap();
        let (back, records) = read_store(&path).unwrap();
        assert_eq!(back, m);
        assert!(records.is_empty());
    }

    #[test]
    fn header_errors_are_distinct() {
        let m = EmbeddingMatrix {
            data: Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap(),
            normalized: false,
        };
        let bytes = encode_matrix(&m);
        let p = Path::new("x.embs");
        assert!(matches!(decode_matrix(p, &bytes[..10]), Err(StoreError::CorruptHeader { .. })));
        let mut bad = bytes.clone();
        bad[3] = b'X';
        assert!(matches!(decode_matrix(p, &bad), Err(StoreError::CorruptHeader { .. })));
        assert!(matches!(
            decode_matrix(p, &bytes[..bytes.len() - 1]),
            Err(StoreError::Truncated { expected: 16, found: 15, .. })
        ));
        assert_eq!(decode_matrix(p, &bytes).unwrap(), m);
    }

    #[test]
    fn sidecar_row_count_mismatch_is_alignment_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.embs");
        let m = EmbeddingMatrix {
            data: Matrix::from_vec(2, 1, vec![1.0, 2.0]).unwrap(),
            normalized: false,
        };
        write_store(&path, &m, &[record(0), record(1)]).unwrap();
        fs::write(sidecar_path(&path), encode_sidecar(&[record(0)])).unwrap();
        assert!(matches!(read_store(&path), Err(StoreError::Alignment { rows: 2, records: 1 })));
        assert!(matches!(
            write_store(&path, &m, &[record(0)]),
            Err(StoreError::Alignment { .. })
        ));
    }

    #[test]
    fn normalized_flag_is_checked_on_write() {
        let dir = tempfile::tempdir().unwrap();
        let m = EmbeddingMatrix {
            data: Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap(),
            normalized: true,
        };
        let err = write_store(&dir.path().join("e.embs"), &m, &[record(0)]).unwrap_err();
        assert!(matches!(err, StoreError::InvalidRow { row: 0, .. }));
    }
}
