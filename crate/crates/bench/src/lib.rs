//! Seeded workloads for the criterion benches.

use causalrag_core::eval::RetrievedContextItem;
use causalrag_core::graph::{KnowledgeGraph, NodeId};
use causalrag_core::vector::{Embedding, EntryKind, VectorIndex};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn random_embedding(rng: &mut impl Rng, dim: usize) -> Embedding {
    Embedding::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
}

/// `entries` node vectors plus a query, all of width `dim`.
pub fn vector_workload(entries: usize, dim: usize, seed: u64) -> (VectorIndex, Embedding) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut index = VectorIndex::new(dim).expect("positive dim");
    for i in 0..entries {
        index
            .insert(format!("n{i:06}"), EntryKind::Node, random_embedding(&mut rng, dim))
            .expect("unique keys");
    }
    let query = random_embedding(&mut rng, dim);
    (index, query)
}

/// Random sparse graph and a handful of seeds drawn from it.
pub fn graph_workload(nodes: usize, edges: usize, seeds: usize, seed: u64) -> (KnowledgeGraph, Vec<NodeId>) {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut graph = KnowledgeGraph::new();
    let ids: Vec<NodeId> = (0..nodes)
        .map(|i| graph.upsert_node(&format!("Node {i}"), "", None).expect("valid label"))
        .collect();
    for _ in 0..edges {
        let (a, b) = (rng.random_range(0..nodes), rng.random_range(0..nodes));
        if a != b {
            graph.add_edge(&ids[a], &ids[b], "causes", "", None).expect("known nodes");
        }
    }
    let picked = (0..seeds).map(|_| ids[rng.random_range(0..nodes)].clone()).collect();
    (graph, picked)
}

/// Retrieved items with half of them matched and judged.
pub fn metric_workload(items: usize, refs: usize) -> (Vec<RetrievedContextItem>, Vec<String>) {
    let references: Vec<String> = (0..refs).map(|i| format!("reference {i}")).collect();
    let items = (0..items)
        .map(|i| {
            let mut item = RetrievedContextItem::new(format!("item {i}"));
            if i % 2 == 0 {
                item.matched_reference = Some(references[i % refs].clone());
                item.judged_causal = Some(i % 3 != 0);
            }
            item
        })
        .collect();
    (items, references)
}
