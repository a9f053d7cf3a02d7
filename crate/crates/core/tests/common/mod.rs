#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use vitscope_core::{seeded_rng, Matrix};

/// `per_blob` points around each of `blobs` centers placed at `spacing`
/// along distinct axes (pairwise center distance `spacing * sqrt(2)`),
/// isotropic noise `sigma`. Labels are the blob index, points grouped by blob.
pub fn gaussian_blobs(blobs: usize, per_blob: usize, dim: usize, spacing: f64, sigma: f64, seed: u64) -> (Matrix<f64>, Vec<usize>) {
    assert!(blobs <= dim);
    let mut rng = seeded_rng(seed, 99);
    let mut data = Vec::with_capacity(blobs * per_blob * dim);
    let mut labels = Vec::new();
    for b in 0..blobs {
        for _ in 0..per_blob {
            for c in 0..dim {
                let center = if c == b { spacing } else { 0.0 };
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(center + sigma * z);
            }
            labels.push(b);
        }
    }
    (Matrix::from_vec(blobs * per_blob, dim, data).unwrap(), labels)
}

pub fn uniform_matrix(rows: usize, cols: usize, seed: u64) -> Matrix<f64> {
    let mut rng = seeded_rng(seed, 7);
    let data = (0..rows * cols).map(|_| rng.random_range(-5.0..5.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

fn choose2(n: u64) -> f64 {
    (n * n.saturating_sub(1)) as f64 / 2.0
}

/// Adjusted Rand index between two labelings.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let index: f64 = table.iter().flatten().map(|&c| choose2(c)).sum();
    let rows: f64 = table.iter().map(|r| choose2(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| choose2(table.iter().map(|r| r[j]).sum())).sum();
    let total = choose2(a.len() as u64);
    let expected = rows * cols / total;
    let max = 0.5 * (rows + cols);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

pub fn relative_error(got: f64, want: f64) -> f64 {
    if got == want {
        return 0.0;
    }
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}
