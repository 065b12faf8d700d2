//! Knowledge graph model and read-only traversal.
//!
//! Nodes are keyed by their canonical label (trimmed, whitespace-collapsed,
//! case-folded), so repeated mentions of one entity across segments collapse
//! onto a single node. Edges keep their extraction direction, but traversal
//! treats the graph as undirected.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::text;

/// Separator placed between merged descriptions.
pub const DESCRIPTION_SEPARATOR: &str = "; ";

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node not found: {0}")]
    NodeNotFound(NodeId),
    #[error("entity label is empty after canonicalization")]
    EmptyLabel,
    #[error("relation label is empty")]
    EmptyRelation,
    #[error("self-loop on {0}")]
    SelfLoop(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge {0} -[{1}]-> {2}")]
    DuplicateEdge(NodeId, String, NodeId),
}

/// Canonical node identifier. Ordering is plain string ordering.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    /// Canonicalizes an entity label into its identity. Returns `None` for
    /// labels that are blank.
    pub fn from_label(label: &str) -> Option<Self> {
        let canonical = text::normalize(label);
        (!canonical.is_empty()).then_some(Self(canonical))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: NodeId,
    /// First-seen surface form, whitespace-collapsed.
    pub label: String,
    pub description: String,
    pub source_segments: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub source: NodeId,
    pub target: NodeId,
    pub relation: String,
    #[serde(default)]
    pub description: String,
    pub source_segments: Vec<String>,
}

type EdgeKey = (NodeId, NodeId, String);

impl GraphEdge {
    fn key(&self) -> EdgeKey {
        (
            self.source.clone(),
            self.target.clone(),
            text::normalize(&self.relation),
        )
    }
}

/// Labeled entity/relation graph. Immutable once handed to retrieval.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphData", try_from = "GraphData")]
pub struct KnowledgeGraph {
    nodes: BTreeMap<NodeId, GraphNode>,
    edges: BTreeMap<EdgeKey, GraphEdge>,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
}

/// Serialized form: sorted node and edge arrays. Adjacency is derived on load.
#[derive(Serialize, Deserialize)]
struct GraphData {
    nodes: Vec<GraphNode>,
    edges: Vec<GraphEdge>,
}

impl From<KnowledgeGraph> for GraphData {
    fn from(graph: KnowledgeGraph) -> Self {
        Self {
            nodes: graph.nodes.into_values().collect(),
            edges: graph.edges.into_values().collect(),
        }
    }
}

impl TryFrom<GraphData> for KnowledgeGraph {
    type Error = GraphError;

    fn try_from(data: GraphData) -> Result<Self, Self::Error> {
        KnowledgeGraph::from_parts(data.nodes, data.edges)
    }
}

fn merge_description(existing: &mut String, addition: &str) {
    let addition = addition.trim();
    if addition.is_empty() || existing.split(DESCRIPTION_SEPARATOR).any(|d| d == addition) {
        return;
    }
    if !existing.is_empty() {
        existing.push_str(DESCRIPTION_SEPARATOR);
    }
    existing.push_str(addition);
}

fn merge_segment(segments: &mut Vec<String>, segment: Option<&str>) {
    if let Some(segment) = segment {
        if let Err(pos) = segments.binary_search_by(|s| s.as_str().cmp(segment)) {
            segments.insert(pos, segment.to_owned());
        }
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a graph from explicit node and edge lists, checking every
    /// structural invariant. Used when loading persisted graphs.
    pub fn from_parts(nodes: Vec<GraphNode>, edges: Vec<GraphEdge>) -> Result<Self, GraphError> {
        let mut graph = Self::new();
        for node in nodes {
            if text::normalize(&node.label).is_empty() {
                return Err(GraphError::EmptyLabel);
            }
            if graph.nodes.contains_key(&node.id) {
                return Err(GraphError::DuplicateNode(node.id));
            }
            graph.adjacency.insert(node.id.clone(), BTreeSet::new());
            graph.nodes.insert(node.id.clone(), node);
        }
        for edge in edges {
            graph.check_endpoints(&edge.source, &edge.target, &edge.relation)?;
            let key = edge.key();
            if graph.edges.contains_key(&key) {
                return Err(GraphError::DuplicateEdge(key.0, edge.relation, key.1));
            }
            graph.link(&edge.source, &edge.target);
            graph.edges.insert(key, edge);
        }
        Ok(graph)
    }

    /// Inserts a node, or merges into the existing node with the same
    /// canonical label (descriptions and source segments are unioned).
    pub fn upsert_node(
        &mut self,
        label: &str,
        description: &str,
        segment: Option<&str>,
    ) -> Result<NodeId, GraphError> {
        let id = NodeId::from_label(label).ok_or(GraphError::EmptyLabel)?;
        let node = self.nodes.entry(id.clone()).or_insert_with(|| GraphNode {
            id: id.clone(),
            label: text::collapse_whitespace(label),
            description: String::new(),
            source_segments: Vec::new(),
        });
        merge_description(&mut node.description, description);
        merge_segment(&mut node.source_segments, segment);
        self.adjacency.entry(id.clone()).or_default();
        Ok(id)
    }

    /// Adds a directed edge between existing nodes. Returns `false` when the
    /// (source, target, relation) triple was already present, in which case
    /// the description and segment are merged into the stored edge.
    pub fn add_edge(
        &mut self,
        source: &NodeId,
        target: &NodeId,
        relation: &str,
        description: &str,
        segment: Option<&str>,
    ) -> Result<bool, GraphError> {
        self.check_endpoints(source, target, relation)?;
        let relation = text::collapse_whitespace(relation);
        let key = (source.clone(), target.clone(), text::normalize(&relation));
        let inserted = !self.edges.contains_key(&key);
        let edge = self.edges.entry(key).or_insert_with(|| GraphEdge {
            source: source.clone(),
            target: target.clone(),
            relation,
            description: String::new(),
            source_segments: Vec::new(),
        });
        merge_description(&mut edge.description, description);
        merge_segment(&mut edge.source_segments, segment);
        self.link(source, target);
        Ok(inserted)
    }

    fn check_endpoints(&self, source: &NodeId, target: &NodeId, relation: &str) -> Result<(), GraphError> {
        for id in [source, target] {
            if !self.nodes.contains_key(id) {
                return Err(GraphError::NodeNotFound(id.clone()));
            }
        }
        if source == target {
            return Err(GraphError::SelfLoop(source.clone()));
        }
        if relation.trim().is_empty() {
            return Err(GraphError::EmptyRelation);
        }
        Ok(())
    }

    fn link(&mut self, a: &NodeId, b: &NodeId) {
        self.adjacency.entry(a.clone()).or_default().insert(b.clone());
        self.adjacency.entry(b.clone()).or_default().insert(a.clone());
    }

    pub fn node(&self, id: &NodeId) -> Option<&GraphNode> {
        self.nodes.get(id)
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.nodes.contains_key(id)
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> impl ExactSizeIterator<Item = &GraphNode> {
        self.nodes.values()
    }

    pub fn node_ids(&self) -> impl ExactSizeIterator<Item = &NodeId> {
        self.nodes.keys()
    }

    /// Edges in ascending (source, target, relation) order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = &GraphEdge> {
        self.edges.values()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Edges joining `a` and `b` in either direction.
    pub fn edges_between<'a>(&'a self, a: &'a NodeId, b: &'a NodeId) -> impl Iterator<Item = &'a GraphEdge> {
        self.edges.values().filter(move |e| {
            (&e.source == a && &e.target == b) || (&e.source == b && &e.target == a)
        })
    }

    /// All nodes sharing an edge with `node`, regardless of direction.
    pub fn neighbors(&self, node: &NodeId) -> Result<&BTreeSet<NodeId>, GraphError> {
        self.adjacency
            .get(node)
            .ok_or_else(|| GraphError::NodeNotFound(node.clone()))
    }

    /// Multi-source breadth-first expansion over the undirected view. Every
    /// node within `hops` steps of some seed is returned with its minimum
    /// distance; seeds sit at distance 0.
    pub fn expand_hops<'a, I>(&self, seeds: I, hops: usize) -> Result<BTreeMap<NodeId, usize>, GraphError>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let mut distances = BTreeMap::new();
        let mut queue = VecDeque::new();
        for seed in seeds {
            if !self.contains(seed) {
                return Err(GraphError::NodeNotFound(seed.clone()));
            }
            if distances.insert(seed.clone(), 0).is_none() {
                queue.push_back(seed.clone());
            }
        }
        while let Some(current) = queue.pop_front() {
            let depth = distances[&current];
            if depth == hops {
                continue;
            }
            for next in &self.adjacency[&current] {
                if !distances.contains_key(next) {
                    distances.insert(next.clone(), depth + 1);
                    queue.push_back(next.clone());
                }
            }
        }
        Ok(distances)
    }

    /// The subgraph on `nodes` with every edge whose endpoints both lie in
    /// the set. Payloads are copied unchanged.
    pub fn induced_subgraph<'a, I>(&self, nodes: I) -> Result<KnowledgeGraph, GraphError>
    where
        I: IntoIterator<Item = &'a NodeId>,
    {
        let mut sub = KnowledgeGraph::new();
        for id in nodes {
            let node = self.node(id).ok_or_else(|| GraphError::NodeNotFound(id.clone()))?;
            sub.adjacency.entry(id.clone()).or_default();
            sub.nodes.insert(id.clone(), node.clone());
        }
        for (key, edge) in &self.edges {
            if sub.contains(&edge.source) && sub.contains(&edge.target) {
                sub.link(&edge.source, &edge.target);
                sub.edges.insert(key.clone(), edge.clone());
            }
        }
        Ok(sub)
    }

    /// One text statement per edge: `source relation target`, followed by
    /// a dash-separated description when the edge carries one.
    pub fn edge_statement(&self, edge: &GraphEdge) -> String {
        let label = |id: &NodeId| {
            self.node(id)
                .map(|n| n.label.clone())
                .unwrap_or_else(|| id.to_string())
        };
        let mut statement = format!("{} {} {}", label(&edge.source), edge.relation, label(&edge.target));
        if !edge.description.is_empty() {
            statement.push_str(" \u{2014} ");
            statement.push_str(&edge.description);
        }
        statement
    }
}
