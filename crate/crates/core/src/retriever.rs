//! Query-time context selection.
//!
//! Causal retrieval picks the `k` nodes nearest the query embedding, expands
//! every seed `s` hops over the undirected graph and materializes the induced
//! subgraph. The regular-RAG baseline returns the `k` nearest segments.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::gateway::{Gateway, GatewayError};
use crate::graph::{GraphError, KnowledgeGraph, NodeId};
use crate::indexer::DocumentIndex;
use crate::vector::{EntryKind, VectorError};

#[derive(Debug, thiserror::Error)]
pub enum RetrievalError {
    #[error("index has no graph nodes")]
    EmptyIndex,
    #[error("index has no chunks")]
    NoChunks,
    #[error("query is empty")]
    EmptyQuery,
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("index entry {0} has no matching record")]
    Inconsistent(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalParams {
    /// Number of seed nodes.
    pub k: usize,
    /// Expansion depth in hops.
    pub s: usize,
}

impl Default for RetrievalParams {
    fn default() -> Self {
        Self { k: 3, s: 3 }
    }
}

impl RetrievalParams {
    pub fn new(k: usize, s: usize) -> Result<Self, RetrievalError> {
        if k == 0 {
            return Err(RetrievalError::ZeroK);
        }
        Ok(Self { k, s })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedNode {
    pub id: NodeId,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedSubgraph {
    /// Seeds in top-k order.
    pub seeds: Vec<SeedNode>,
    /// Minimum hop distance from any seed.
    pub frontier: BTreeMap<NodeId, usize>,
    pub subgraph: KnowledgeGraph,
    pub params: RetrievalParams,
    pub warnings: Vec<String>,
}

/// A retrieved piece of context in text form, with the segments it came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextStatement {
    pub text: String,
    pub sources: Vec<String>,
}

impl ContextStatement {
    pub fn from_edge(graph: &KnowledgeGraph, edge: &crate::graph::GraphEdge) -> Self {
        Self {
            text: graph.edge_statement(edge),
            sources: edge.source_segments.clone(),
        }
    }
}

impl RetrievedSubgraph {
    /// Context statements, one per subgraph edge.
    pub fn statements(&self) -> Vec<ContextStatement> {
        self.subgraph
            .edges()
            .map(|e| ContextStatement::from_edge(&self.subgraph, e))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievedChunk {
    pub segment_id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChunkContext {
    pub chunks: Vec<RetrievedChunk>,
}

impl ChunkContext {
    pub fn statements(&self) -> Vec<ContextStatement> {
        self.chunks
            .iter()
            .map(|c| ContextStatement {
                text: c.text.clone(),
                sources: vec![c.segment_id.clone()],
            })
            .collect()
    }
}

fn embed_query(query: &str, gateway: &Gateway) -> Result<crate::vector::Embedding, RetrievalError> {
    if query.trim().is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    Ok(gateway.embed_one(query)?)
}

/// Seeds plus `s`-hop expansion. Embeds the query exactly once.
pub fn retrieve_causal_context(
    query: &str,
    index: &DocumentIndex,
    params: RetrievalParams,
    gateway: &Gateway,
) -> Result<RetrievedSubgraph, RetrievalError> {
    if params.k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    if index.graph.is_empty() {
        return Err(RetrievalError::EmptyIndex);
    }
    let query_vec = embed_query(query, gateway)?;
    let mut warnings = Vec::new();
    let node_count = index.graph.node_count();
    if node_count < params.k {
        warnings.push(format!(
            "graph has {node_count} nodes, fewer than k = {}; all nodes are seeds",
            params.k
        ));
    }
    let seeds = index
        .vectors
        .top_k(&query_vec, params.k, EntryKind::Node)?
        .into_iter()
        .map(|scored| {
            let id = NodeId::from_label(&scored.key)
                .filter(|id| index.graph.contains(id) && id.as_str() == scored.key)
                .ok_or_else(|| RetrievalError::Inconsistent(scored.key.clone()))?;
            Ok(SeedNode {
                id,
                score: scored.score,
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    let frontier = index.graph.expand_hops(seeds.iter().map(|s| &s.id), params.s)?;
    let subgraph = index.graph.induced_subgraph(frontier.keys())?;
    Ok(RetrievedSubgraph {
        seeds,
        frontier,
        subgraph,
        params,
        warnings,
    })
}

/// Top-k segments by cosine similarity.
pub fn retrieve_baseline(
    query: &str,
    index: &DocumentIndex,
    k: usize,
    gateway: &Gateway,
) -> Result<ChunkContext, RetrievalError> {
    if k == 0 {
        return Err(RetrievalError::ZeroK);
    }
    if index.vectors.count(EntryKind::Chunk) == 0 {
        return Err(RetrievalError::NoChunks);
    }
    let query_vec = embed_query(query, gateway)?;
    let chunks = index
        .vectors
        .top_k(&query_vec, k, EntryKind::Chunk)?
        .into_iter()
        .map(|scored| {
            let seg = index
                .segment(&scored.key)
                .ok_or_else(|| RetrievalError::Inconsistent(scored.key.clone()))?;
            Ok(RetrievedChunk {
                segment_id: seg.id.clone(),
                text: seg.text.clone(),
                score: scored.score,
            })
        })
        .collect::<Result<Vec<_>, RetrievalError>>()?;
    Ok(ChunkContext { chunks })
}
