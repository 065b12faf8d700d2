mod support;

use causalrag_core::vector::{cosine_similarity, Embedding, EntryKind, VectorIndex};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Small integer coordinates so that exact score ties are common.
fn random_vector(rng: &mut impl Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-2..=2) as f64).collect();
        if v.iter().any(|x| *x != 0.0) {
            return Embedding::new(v);
        }
    }
}

fn random_index(seed: u64, max_entries: usize) -> (VectorIndex, Embedding) {
    let mut rng = StdRng::seed_from_u64(seed);
    let dim = rng.random_range(1..=6);
    let mut index = VectorIndex::new(dim).unwrap();
    for _ in 0..rng.random_range(0..=max_entries) {
        let kind = if rng.random_bool(0.5) { EntryKind::Node } else { EntryKind::Chunk };
        let key = format!("k{:05}", rng.random_range(0..100_000));
        // Colliding keys are skipped.
        let _ = index.insert(key, kind, random_vector(&mut rng, dim));
    }
    (index, random_vector(&mut rng, dim))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_k_matches_full_sort(seed in any::<u64>(), k in 0usize..40) {
        let (index, query) = random_index(seed, 300);
        for kind in [EntryKind::Node, EntryKind::Chunk] {
            let got: Vec<(String, f64)> = index
                .top_k(&query, k, kind)
                .unwrap()
                .into_iter()
                .map(|s| (s.key, s.score))
                .collect();
            prop_assert_eq!(got, support::top_k_oracle(&index, &query, k, kind));
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let a = random_vector(&mut rng, 5);
        let b = random_vector(&mut rng, 5);
        let ab = cosine_similarity(&a, &b).unwrap();
        prop_assert_eq!(ab, cosine_similarity(&b, &a).unwrap());
        prop_assert!((-1.0..=1.0).contains(&ab));
    }
}

#[test]
fn k_beyond_size_returns_everything() {
    let (index, query) = random_index(7, 25);
    let n = index.count(EntryKind::Node);
    assert_eq!(index.top_k(&query, n + 10, EntryKind::Node).unwrap().len(), n);
}

#[test]
fn dimension_mismatch_is_rejected() {
    let index = VectorIndex::new(3).unwrap();
    assert!(index.top_k(&Embedding::new(vec![1.0, 0.0]), 1, EntryKind::Node).is_err());
}
