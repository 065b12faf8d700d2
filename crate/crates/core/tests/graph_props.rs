mod support;

use std::collections::BTreeSet;

use causalrag_core::graph::{KnowledgeGraph, NodeId};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn graph_and_seeds(seed: u64, max_nodes: usize) -> (KnowledgeGraph, Vec<NodeId>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_nodes);
    let m = rng.random_range(0..=3 * n);
    let g = support::random_graph(&mut rng, n, m);
    let ids: Vec<NodeId> = g.node_ids().cloned().collect();
    let seeds = ids.iter().filter(|_| rng.random_bool(0.2)).cloned().collect::<Vec<_>>();
    let seeds = if seeds.is_empty() { vec![ids[0].clone()] } else { seeds };
    (g, seeds)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn expansion_matches_shortest_paths(seed in any::<u64>(), hops in 0usize..5) {
        let (g, seeds) = graph_and_seeds(seed, 50);
        let got = g.expand_hops(&seeds, hops).unwrap();
        prop_assert_eq!(got, support::expansion_oracle(&g, &seeds, hops));
    }

    #[test]
    fn expansion_monotone_in_hops(seed in any::<u64>(), a in 0usize..5, b in 0usize..5) {
        let (g, seeds) = graph_and_seeds(seed, 30);
        let (lo, hi) = (a.min(b), a.max(b));
        let small = g.expand_hops(&seeds, lo).unwrap();
        let large = g.expand_hops(&seeds, hi).unwrap();
        for (id, d) in &small {
            prop_assert_eq!(large.get(id), Some(d));
        }
    }

    #[test]
    fn expansion_monotone_in_seeds(seed in any::<u64>(), hops in 0usize..4) {
        let (g, seeds) = graph_and_seeds(seed, 30);
        let subset = &seeds[..seeds.len().div_ceil(2)];
        let small: BTreeSet<_> = g.expand_hops(subset, hops).unwrap().into_keys().collect();
        let large: BTreeSet<_> = g.expand_hops(&seeds, hops).unwrap().into_keys().collect();
        prop_assert!(small.is_subset(&large));
    }

    #[test]
    fn induced_subgraph_is_idempotent(seed in any::<u64>()) {
        let (g, seeds) = graph_and_seeds(seed, 30);
        let keep: Vec<NodeId> = g.expand_hops(&seeds, 1).unwrap().into_keys().collect();
        let once = g.induced_subgraph(&keep).unwrap();
        let twice = once.induced_subgraph(&keep).unwrap();
        prop_assert_eq!(&once, &twice);
        for e in once.edges() {
            prop_assert!(keep.contains(&e.source) && keep.contains(&e.target));
        }
        let expected = g.edges().filter(|e| keep.contains(&e.source) && keep.contains(&e.target)).count();
        prop_assert_eq!(once.edge_count(), expected);
    }

    #[test]
    fn neighbors_match_edge_scan(seed in any::<u64>()) {
        let (g, _) = graph_and_seeds(seed, 20);
        for v in g.node_ids() {
            let scan: BTreeSet<NodeId> = g
                .edges()
                .filter_map(|e| {
                    if &e.source == v { Some(e.target.clone()) }
                    else if &e.target == v { Some(e.source.clone()) }
                    else { None }
                })
                .collect();
            prop_assert_eq!(g.neighbors(v).unwrap(), &scan);
        }
    }

    #[test]
    fn serde_round_trip(seed in any::<u64>()) {
        let (g, _) = graph_and_seeds(seed, 20);
        let json = serde_json::to_string(&g).unwrap();
        let back: KnowledgeGraph = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, g);
    }
}
