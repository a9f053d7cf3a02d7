mod common;
#[path = "common/oracles.rs"]
mod oracles;

use common::{adjusted_rand_index, gaussian_blobs, relative_error, uniform_matrix};
use proptest::prelude::*;
use rand::Rng;
use vitscope_core::clustering::{fit, inertia, kmeans_pp_init, lloyd_step, predict, representatives, KMeansConfig};
use vitscope_core::matrix::{distance, squared_distance};
use vitscope_core::{seeded_rng, Matrix};

fn nearest_inertia(x: &Matrix<f64>, centroids: &Matrix<f64>) -> f64 {
    x.iter_rows()
        .map(|p| centroids.iter_rows().map(|c| squared_distance(p, c)).fold(f64::INFINITY, f64::min))
        .sum()
}

#[test]
fn inertia_never_increases_across_lloyd_iterations() {
    let mut violations = Vec::new();
    for trial in 0..100u64 {
        let mut rng = seeded_rng(trial, 11);
        let n = rng.random_range(10..120);
        let d = rng.random_range(1..6);
        let k = rng.random_range(2..8usize.min(n));
        let x = uniform_matrix(n, d, trial + 500);
        let mut centroids = if trial % 2 == 0 {
            kmeans_pp_init(&x, k, &mut rng).unwrap()
        } else {
            // Arbitrary starting points, including ones far from any data.
            let data = (0..k * d).map(|_| rng.random_range(-20.0..20.0)).collect();
            Matrix::from_vec(k, d, data).unwrap()
        };
        let mut previous = nearest_inertia(&x, &centroids);
        for iteration in 0..50 {
            let step = lloyd_step(&x, &centroids).unwrap();
            if step.inertia > previous {
                violations.push((trial, iteration, previous, step.inertia));
            }
            previous = step.inertia;
            centroids = step.centroids;
        }
    }
    assert!(violations.is_empty(), "{violations:?}");
}

#[test]
fn reported_inertia_matches_recomputation() {
    for seed in 0..20 {
        let (x, _) = gaussian_blobs(4, 25, 6, 5.0, 1.0, seed);
        let model = fit(&x, &KMeansConfig { k: 4, seed, ..KMeansConfig::default() }).unwrap();
        let j = inertia(&x, &model.centroids, &model.assignments);
        assert!(relative_error(model.inertia, j) <= 1e-6);
        let per_cluster: f64 = model.cluster_inertia(&x).iter().sum();
        assert!(relative_error(per_cluster, j) <= 1e-6);
        assert_eq!(model.cluster_sizes().iter().sum::<usize>(), 100);
        assert!(model.cluster_sizes().iter().all(|&s| s > 0));
    }
}

#[test]
fn four_point_line_reaches_global_optimum() {
    let points: Vec<Vec<f64>> = [0.0, 1.0, 10.0, 11.0].iter().map(|&v| vec![v]).collect();
    let x = Matrix::from_rows(1, &points).unwrap();
    let optimum = oracles::exhaustive_min_inertia(&points, 2);
    assert_eq!(optimum, 1.0);
    for seed in 0..50 {
        let model = fit(&x, &KMeansConfig { k: 2, seed, ..KMeansConfig::default() }).unwrap();
        assert!((model.inertia - optimum).abs() <= 1e-12, "seed {seed}: {}", model.inertia);
        let a = &model.assignments;
        assert!(a[0] == a[1] && a[2] == a[3] && a[0] != a[2]);
    }
}

#[test]
fn small_sets_match_exhaustive_search() {
    for seed in 0..30 {
        let x = uniform_matrix(7, 2, seed);
        let points: Vec<Vec<f64>> = x.iter_rows().map(|r| r.to_vec()).collect();
        let optimum = oracles::exhaustive_min_inertia(&points, 3);
        let model = fit(&x, &KMeansConfig { k: 3, n_init: 20, seed, ..KMeansConfig::default() }).unwrap();
        assert!(model.inertia >= optimum - 1e-9);
    }
}

#[test]
fn blobs_are_recovered() {
    let (x, truth) = gaussian_blobs(5, 30, 8, 10.0, 0.5, 3);
    let model = fit(&x, &KMeansConfig { k: 5, ..KMeansConfig::default() }).unwrap();
    assert_eq!(adjusted_rand_index(&model.assignments, &truth), 1.0);
    assert_eq!(model.predict(&x).unwrap(), model.assignments);
}

#[test]
fn representatives_follow_exhaustive_distance_sort() {
    let (x, _) = gaussian_blobs(3, 15, 4, 6.0, 1.0, 2);
    let ids: Vec<u64> = (0..45).map(|i| 1000 - 7 * i as u64).collect();
    let model = fit(&x, &KMeansConfig { k: 3, ..KMeansConfig::default() }).unwrap();
    let reps = representatives(&x, &ids, &model.centroids, 10).unwrap();
    for (c, list) in reps.per_cluster.iter().enumerate() {
        let mut all: Vec<(f64, u64)> =
            (0..45).map(|i| (distance(x.row(i), model.centroids.row(c)), ids[i])).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let want: Vec<u64> = all.iter().take(10).map(|p| p.1).collect();
        let got: Vec<u64> = list.iter().map(|n| n.record_id).collect();
        assert_eq!(got, want);
    }
    let capped = representatives(&x, &ids, &model.centroids, 100).unwrap();
    assert!(capped.per_cluster.iter().all(|l| l.len() == 45));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn assignments_invariant_under_translation(seed in 0u64..10_000, shift in prop::collection::vec(-100.0f64..100.0, 3)) {
        let (x, _) = gaussian_blobs(3, 10, 3, 8.0, 0.5, seed);
        let moved = Matrix::from_rows(3, x.iter_rows().map(|r| r.iter().zip(&shift).map(|(v, s)| v + s).collect::<Vec<_>>())).unwrap();
        let config = KMeansConfig { k: 3, seed, ..KMeansConfig::default() };
        let a = fit(&x, &config).unwrap();
        let b = fit(&moved, &config).unwrap();
        prop_assert_eq!(&a.assignments, &b.assignments);
        prop_assert!(relative_error(b.inertia, a.inertia) <= 1e-6);
    }

    #[test]
    fn predict_returns_nearest_centroid(seed in 0u64..10_000, n in 1usize..30) {
        let centroids = uniform_matrix(4, 3, seed);
        let y = uniform_matrix(n, 3, seed + 1);
        let labels = predict(&centroids, &y).unwrap();
        for (i, &l) in labels.iter().enumerate() {
            let best = (0..4).map(|c| squared_distance(y.row(i), centroids.row(c))).fold(f64::INFINITY, f64::min);
            prop_assert_eq!(squared_distance(y.row(i), centroids.row(l)), best);
        }
    }
}
