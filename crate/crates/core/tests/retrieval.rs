mod support;

use std::collections::BTreeSet;

use causalrag_core::gateway::{Gateway, MockScript};
use causalrag_core::graph::{KnowledgeGraph, NodeId};
use causalrag_core::retriever::{retrieve_baseline, retrieve_causal_context, RetrievalError, RetrievalParams};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn gw() -> Gateway {
    Gateway::mock(MockScript::new(), support::DIM)
}

fn node_set(index: &causalrag_core::indexer::DocumentIndex, query: &str, k: usize, s: usize) -> BTreeSet<NodeId> {
    retrieve_causal_context(query, index, RetrievalParams::new(k, s).unwrap(), &gw())
        .unwrap()
        .frontier
        .into_keys()
        .collect()
}

#[test]
fn retrieved_nodes_grow_with_k_and_s() {
    let mut rng = StdRng::seed_from_u64(0xbeef);
    let mut violations = 0;
    for i in 0..50 {
        let n = rng.random_range(2..=30);
        let m = rng.random_range(0..=2 * n);
        let graph = support::random_graph(&mut rng, n, m);
        let index = support::index_from_graph(&format!("g{i}"), &graph);
        let query = support::random_words(&mut rng, 3);
        for k in 1..=5 {
            for s in 0..=3 {
                let here = node_set(&index, &query, k, s);
                if !here.is_subset(&node_set(&index, &query, k + 1, s)) {
                    violations += 1;
                }
                if !here.is_subset(&node_set(&index, &query, k, s + 1)) {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}

#[test]
fn query_is_embedded_exactly_once() {
    let mut rng = StdRng::seed_from_u64(1);
    let index = support::index_from_graph("g", &support::random_graph(&mut rng, 10, 15));
    let gw = gw();
    retrieve_causal_context("price shock", &index, RetrievalParams::default(), &gw).unwrap();
    assert_eq!(gw.stats().embed_calls, 1);
    assert_eq!(gw.stats().embedded_texts, 1);
    assert_eq!(gw.stats().completions, 0);
}

fn path_graph() -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let ids: Vec<_> = ["Rain", "Wet Roads", "Accidents", "Traffic"]
        .iter()
        .map(|l| g.upsert_node(l, "", None).unwrap())
        .collect();
    for w in ids.windows(2) {
        g.add_edge(&w[0], &w[1], "causes", "", None).unwrap();
    }
    g
}

#[test]
fn zero_hops_returns_only_seeds() {
    let index = support::index_from_graph("p", &path_graph());
    let got = retrieve_causal_context("rain", &index, RetrievalParams::new(2, 0).unwrap(), &gw()).unwrap();
    assert_eq!(got.seeds.len(), 2);
    assert!(got.frontier.values().all(|d| *d == 0));
    let seeds: BTreeSet<_> = got.seeds.iter().map(|s| s.id.clone()).collect();
    let frontier: BTreeSet<_> = got.frontier.keys().cloned().collect();
    assert_eq!(seeds, frontier);
}

#[test]
fn one_seed_one_hop_on_a_path() {
    let index = support::index_from_graph("p", &path_graph());
    let got = retrieve_causal_context("rain", &index, RetrievalParams::new(1, 1).unwrap(), &gw()).unwrap();
    assert_eq!(got.seeds[0].id.as_str(), "rain");
    let names: Vec<_> = got.frontier.iter().map(|(k, d)| (k.as_str(), *d)).collect();
    assert_eq!(names, [("rain", 0), ("wet roads", 1)]);
    assert_eq!(got.subgraph.edge_count(), 1);
    assert_eq!(got.statements().len(), 1);
}

#[test]
fn k_larger_than_graph_warns() {
    let index = support::index_from_graph("p", &path_graph());
    let got = retrieve_causal_context("rain", &index, RetrievalParams::new(10, 0).unwrap(), &gw()).unwrap();
    assert_eq!(got.seeds.len(), 4);
    assert_eq!(got.warnings.len(), 1);
}

#[test]
fn degenerate_inputs() {
    assert!(matches!(RetrievalParams::new(0, 1), Err(RetrievalError::ZeroK)));
    let index = support::index_from_graph("p", &path_graph());
    assert!(matches!(
        retrieve_causal_context("   ", &index, RetrievalParams::default(), &gw()),
        Err(RetrievalError::EmptyQuery)
    ));
    let empty = support::index_from_graph("e", &KnowledgeGraph::new());
    let g = gw();
    assert!(matches!(
        retrieve_causal_context("rain", &empty, RetrievalParams::default(), &g),
        Err(RetrievalError::EmptyIndex)
    ));
    assert_eq!(g.stats().embed_calls, 0);
}

#[test]
fn baseline_returns_nearest_chunks() {
    let index = support::index_from_graph("p", &path_graph());
    let got = retrieve_baseline("synthetic document", &index, 3, &gw()).unwrap();
    assert_eq!(got.chunks.len(), index.segments.len().min(3));
    assert!(got.chunks.iter().all(|c| c.segment_id.starts_with("p/")));
}
