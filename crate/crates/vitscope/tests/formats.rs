//! Round trips and invariants of the store, corpus and plot formats.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use vitscope::corpus::{deduplicate, sample, Manifest};
use vitscope::plot::{render_svg, ScatterSpec};
use vitscope::store::{decode_matrix, encode_matrix, read_store, write_store, EmbeddingMatrix, PostRecord};
use vitscope::weights_io::{decode_weights, encode_weights};
use vitscope_core::{Matrix, ModelConfig, ModelWeights};

fn record(id: u64, hash: u8) -> PostRecord {
    PostRecord {
        record_id: id,
        source: "local".into(),
        image_path: format!("/data/{id}.png"),
        content_hash: format!("{hash:064x}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn store_roundtrip_is_bitwise(rows in 0usize..20, dim in 1usize..16, bits in prop::collection::vec(any::<u32>(), 320)) {
        let data: Vec<f32> = (0..rows * dim)
            .map(|i| {
                let v = f32::from_bits(bits[i % bits.len()].rotate_left(i as u32));
                if v.is_finite() { v } else { i as f32 }
            })
            .collect();
        let matrix = EmbeddingMatrix { data: Matrix::from_vec(rows, dim, data).unwrap(), normalized: false };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.embs");
        let recs: Vec<PostRecord> = (0..rows as u64).map(|i| record(i * 3, i as u8)).collect();
        write_store(&path, &matrix, &recs).unwrap();
        let (back, back_recs) = read_store(&path).unwrap();
        prop_assert_eq!(back.data.shape(), (rows, dim));
        let a: Vec<u32> = back.data.as_slice().iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = matrix.data.as_slice().iter().map(|v| v.to_bits()).collect();
        prop_assert_eq!(a, b);
        prop_assert_eq!(back_recs, recs);
    }

    #[test]
    fn truncating_a_store_never_decodes(rows in 1usize..8, dim in 1usize..8, cut in 1usize..64) {
        let matrix = EmbeddingMatrix { data: Matrix::from_vec(rows, dim, vec![0.5; rows * dim]).unwrap(), normalized: false };
        let bytes = encode_matrix(&matrix);
        let keep = bytes.len().saturating_sub(cut);
        prop_assert!(decode_matrix("t.embs".as_ref(), &bytes[..keep]).is_err());
    }

    #[test]
    fn dedup_is_idempotent_and_keeps_one_per_hash(hashes in prop::collection::vec(0u8..12, 0..60)) {
        let m = Manifest::new(hashes.iter().enumerate().map(|(i, &h)| record(i as u64, h)).collect());
        let once = deduplicate(&m);
        let twice = deduplicate(&once);
        prop_assert_eq!(&once.records, &twice.records);
        let distinct: BTreeSet<u8> = hashes.iter().copied().collect();
        prop_assert_eq!(once.len(), distinct.len());
        let kept: BTreeSet<&str> = once.records.iter().map(|r| r.content_hash.as_str()).collect();
        prop_assert_eq!(kept.len(), once.len());
        // First occurrence wins and record order is preserved.
        let ids: Vec<u64> = once.records.iter().map(|r| r.record_id).collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        prop_assert_eq!(&ids, &sorted);
        for r in &once.records {
            prop_assert!(m.records.iter().take_while(|o| o.record_id < r.record_id).all(|o| o.content_hash != r.content_hash));
        }
    }

    #[test]
    fn sample_is_a_seeded_ordered_subset(n in 0usize..40, take in 0usize..40, seed in any::<u64>()) {
        let m = Manifest::new((0..n as u64).map(|i| record(i, i as u8)).collect());
        match sample(&m, take, seed) {
            Ok(s) => {
                prop_assert!(take <= n);
                prop_assert_eq!(s.len(), take);
                prop_assert!(s.records.windows(2).all(|w| w[0].record_id < w[1].record_id));
                prop_assert_eq!(s.records, sample(&m, take, seed).unwrap().records);
            }
            Err(_) => prop_assert!(take > n),
        }
    }

    #[test]
    fn scatter_has_one_marker_per_point(n in 0usize..40, k in 1usize..6, seed in any::<u64>()) {
        let data: Vec<f64> = (0..n * 2).map(|i| ((seed.wrapping_mul(i as u64 + 1) % 1000) as f64) / 10.0).collect();
        let points = Matrix::from_vec(n, 2, data).unwrap();
        let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
        let ids: Vec<u64> = (0..n as u64).collect();
        let svg = render_svg(&points, &labels, &ids, &ScatterSpec::default()).unwrap();
        prop_assert_eq!(svg.matches("class=\"point\"").count(), n);
        let clusters = labels.iter().collect::<BTreeSet<_>>().len();
        prop_assert_eq!(svg.matches("(n=").count(), clusters);
        prop_assert_eq!(&svg, &render_svg(&points, &labels, &ids, &ScatterSpec::default()).unwrap());
    }
}

#[test]
fn weights_survive_encoding() {
    let config = ModelConfig {
        image_size: 32,
        patch_size: 16,
        hidden_dim: 8,
        num_layers: 2,
        num_heads: 2,
        mlp_dim: 16,
        ..ModelConfig::default()
    };
    let w = ModelWeights::random(config, 3).unwrap();
    let bytes = encode_weights(&w);
    let back = decode_weights(&bytes).unwrap();
    assert_eq!(back.named_tensors(), w.named_tensors());
    assert_eq!(back.config, w.config);
}
