//! Causal reasoning over a retrieved subgraph: path discovery, a
//! query-focused causal summary and the final grounded answer.

mod report;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use report::{parse_citations, parse_report, RawPath, RawReport, PATHS_HEADER};

use crate::gateway::{bindings, prompt_digest, Gateway, GatewayError, PromptError, TemplateId};
use crate::graph::{KnowledgeGraph, NodeId};
use crate::indexer::DocumentIndex;
use crate::retriever::{retrieve_causal_context, ContextStatement, RetrievalError, RetrievalParams, RetrievedSubgraph, SeedNode};

/// Summary text used when discovery found no causal path.
pub const NO_CAUSAL_EVIDENCE: &str = "No causal evidence found for this query.";
pub const DEFAULT_RESPONSE_TYPE: &str = "multiple paragraphs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Retrieval,
    Discovery,
    Summary,
    Generation,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Retrieval => "retrieval",
            Stage::Discovery => "discovery",
            Stage::Summary => "summary",
            Stage::Generation => "generation",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CausalError {
    #[error("retrieved subgraph is empty")]
    EmptySubgraph,
    #[error("causal report unparseable after re-prompt")]
    DiscoveryFailed,
    #[error("causal summary empty after re-prompt")]
    SummaryFailed,
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Retrieval(#[from] RetrievalError),
    #[error("{stage} stage: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<CausalError>,
    },
}

impl CausalError {
    fn at(self, stage: Stage) -> Self {
        CausalError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &CausalError {
        match self {
            CausalError::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn stage(&self) -> Option<Stage> {
        match self {
            CausalError::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLink {
    pub relation: String,
    /// True when no subgraph edge joins the two nodes, i.e. the hop is
    /// asserted by the model rather than backed by the graph.
    pub inferred: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalPath {
    pub nodes: Vec<NodeId>,
    /// `links[i]` joins `nodes[i]` and `nodes[i + 1]`.
    pub links: Vec<PathLink>,
    pub rationale: String,
}

impl CausalPath {
    pub fn render(&self, graph: &KnowledgeGraph) -> String {
        let label = |id: &NodeId| graph.node(id).map(|n| n.label.clone()).unwrap_or_else(|| id.to_string());
        let mut out = label(&self.nodes[0]);
        for (link, node) in self.links.iter().zip(&self.nodes[1..]) {
            out.push_str(&format!(" -[{}]-> {}", link.relation, label(node)));
            if link.inferred {
                out.push_str(" (inferred)");
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalReport {
    pub paths: Vec<CausalPath>,
    pub refined_nodes: BTreeSet<NodeId>,
    pub narrative: String,
    /// Dropped paths (hallucinated or malformed), one line each.
    pub warnings: Vec<String>,
}

impl CausalReport {
    fn empty() -> Self {
        Self {
            paths: Vec::new(),
            refined_nodes: BTreeSet::new(),
            narrative: String::new(),
            warnings: Vec::new(),
        }
    }

    /// Statements of the subgraph edges backing each graph-supported hop,
    /// deduplicated in path order. This is the causal system's retrieved
    /// context.
    pub fn context_statements(&self, subgraph: &KnowledgeGraph) -> Vec<ContextStatement> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for path in &self.paths {
            for (pair, link) in path.nodes.windows(2).zip(&path.links) {
                if link.inferred {
                    continue;
                }
                for edge in subgraph.edges_between(&pair[0], &pair[1]) {
                    let statement = ContextStatement::from_edge(subgraph, edge);
                    if seen.insert(statement.text.clone()) {
                        out.push(statement);
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalSummary {
    pub text: String,
    /// 1-based numbers of the report paths the summary cites.
    pub source_paths: Vec<usize>,
}

/// Everything needed to audit an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub query: String,
    pub params: RetrievalParams,
    pub response_type: String,
    pub seeds: Vec<SeedNode>,
    pub frontier: std::collections::BTreeMap<NodeId, usize>,
    pub paths: Vec<String>,
    pub source_paths: Vec<usize>,
    pub warnings: Vec<String>,
    pub prompt_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Answer {
    pub text: String,
    pub prompt_digest: String,
    pub summary: CausalSummary,
    pub provenance: Provenance,
    #[serde(skip)]
    pub retrieved: Option<RetrievedSubgraph>,
    #[serde(skip)]
    pub report: Option<CausalReport>,
}

/// Entity and relationship tables handed to the discovery prompt.
pub fn graph_data(graph: &KnowledgeGraph) -> String {
    let mut out = String::from("Entities:\nlabel | description\n");
    for node in graph.nodes() {
        out.push_str(&format!("{} | {}\n", node.label, node.description));
    }
    out.push_str("\nRelationships:\nsource | relation | target | description\n");
    for edge in graph.edges() {
        let label = |id: &NodeId| graph.node(id).map(|n| n.label.as_str()).unwrap_or(id.as_str()).to_string();
        out.push_str(&format!(
            "{} | {} | {} | {}\n",
            label(&edge.source),
            edge.relation,
            label(&edge.target),
            edge.description
        ));
    }
    out.trim_end().to_string()
}

fn resolve_path(raw: &RawPath, graph: &KnowledgeGraph, number: usize) -> Result<CausalPath, String> {
    if raw.labels.len() < 2 {
        return Err(format!("path {number}: fewer than two nodes"));
    }
    let mut nodes = Vec::with_capacity(raw.labels.len());
    for label in &raw.labels {
        match NodeId::from_label(label).filter(|id| graph.contains(id)) {
            Some(id) => nodes.push(id),
            None => return Err(format!("path {number}: node {label:?} is not in the retrieved subgraph")),
        }
    }
    if nodes.windows(2).any(|w| w[0] == w[1]) {
        return Err(format!("path {number}: repeats a node in consecutive hops"));
    }
    let links = nodes
        .windows(2)
        .zip(&raw.relations)
        .map(|(pair, relation)| {
            let backing = graph.edges_between(&pair[0], &pair[1]).next();
            let relation = relation
                .clone()
                .or_else(|| backing.map(|e| e.relation.clone()))
                .unwrap_or_else(|| "causes".to_string());
            PathLink {
                relation,
                inferred: backing.is_none(),
            }
        })
        .collect();
    Ok(CausalPath {
        nodes,
        links,
        rationale: raw.rationale.clone(),
    })
}

/// Asks the model for causal paths over the retrieved subgraph. Paths that
/// mention nodes outside the subgraph are dropped with a warning.
pub fn discover_causal_paths(retrieved: &RetrievedSubgraph, gateway: &Gateway) -> Result<CausalReport, CausalError> {
    let graph = &retrieved.subgraph;
    if graph.is_empty() {
        return Err(CausalError::EmptySubgraph);
    }
    if graph.node_count() < 2 {
        return Ok(CausalReport::empty());
    }
    let raw = gateway
        .complete_parsed(
            TemplateId::CausalDiscovery,
            &bindings([("graph_data", graph_data(graph))]),
            parse_report,
        )?
        .ok_or(CausalError::DiscoveryFailed)?;

    let mut report = CausalReport {
        narrative: raw.narrative.clone(),
        ..CausalReport::empty()
    };
    for (i, raw_path) in raw.paths.iter().enumerate() {
        match resolve_path(raw_path, graph, i + 1) {
            Ok(path) => {
                report.refined_nodes.extend(path.nodes.iter().cloned());
                report.paths.push(path);
            }
            Err(warning) => {
                tracing::warn!(%warning, "dropping causal path");
                report.warnings.push(warning);
            }
        }
    }
    Ok(report)
}

/// Numbered path list bound into the summary prompt.
pub fn numbered_paths(report: &CausalReport, graph: &KnowledgeGraph) -> String {
    report
        .paths
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut line = format!("[{}] {}", i + 1, p.render(graph));
            if !p.rationale.is_empty() {
                line.push_str(&format!(" | {}", p.rationale));
            }
            line
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn summarize_causal(
    report: &CausalReport,
    graph: &KnowledgeGraph,
    query: &str,
    response_type: &str,
    gateway: &Gateway,
) -> Result<CausalSummary, CausalError> {
    if report.paths.is_empty() {
        return Ok(CausalSummary {
            text: NO_CAUSAL_EVIDENCE.to_string(),
            source_paths: Vec::new(),
        });
    }
    let text = gateway
        .complete_parsed(
            TemplateId::CausalSummary,
            &bindings([
                ("causal_summary", report.narrative.clone()),
                ("causal_paths", numbered_paths(report, graph)),
                ("response_type", response_type.to_string()),
                ("query", query.to_string()),
            ]),
            |reply| (!reply.trim().is_empty()).then(|| reply.to_string()),
        )?
        .ok_or(CausalError::SummaryFailed)?;
    let source_paths = parse_citations(&text, report.paths.len());
    Ok(CausalSummary { text, source_paths })
}

/// Renders the final answer prompt from a context block.
pub fn answer_prompt(
    context: &str,
    query: &str,
    response_type: &str,
) -> Result<crate::gateway::RenderedPrompt, PromptError> {
    TemplateId::AnswerGeneration.template().render(&bindings([
        ("context", context.to_string()),
        ("response_type", response_type.to_string()),
        ("query", query.to_string()),
    ]))
}

/// Retrieval, discovery, summary and generation in sequence.
pub fn answer(
    query: &str,
    index: &DocumentIndex,
    params: RetrievalParams,
    response_type: &str,
    gateway: &Gateway,
) -> Result<Answer, CausalError> {
    let retrieved = retrieve_causal_context(query, index, params, gateway)
        .map_err(|e| CausalError::from(e).at(Stage::Retrieval))?;
    let report = discover_causal_paths(&retrieved, gateway).map_err(|e| e.at(Stage::Discovery))?;
    let summary = summarize_causal(&report, &retrieved.subgraph, query, response_type, gateway)
        .map_err(|e| e.at(Stage::Summary))?;
    let prompt = answer_prompt(&summary.text, query, response_type).map_err(|e| CausalError::from(e).at(Stage::Generation))?;
    let text = gateway
        .complete(&prompt)
        .map_err(|e| CausalError::from(e).at(Stage::Generation))?;

    let mut warnings = retrieved.warnings.clone();
    warnings.extend(report.warnings.iter().cloned());
    let prompt_digest = prompt.digest();
    let provenance = Provenance {
        query: query.to_string(),
        params,
        response_type: response_type.to_string(),
        seeds: retrieved.seeds.clone(),
        frontier: retrieved.frontier.clone(),
        paths: report.paths.iter().map(|p| p.render(&retrieved.subgraph)).collect(),
        source_paths: summary.source_paths.clone(),
        warnings,
        prompt_digest: prompt_digest.clone(),
    };
    debug_assert_eq!(prompt_digest, prompt_digest_of(&summary.text, query, response_type));
    Ok(Answer {
        text,
        prompt_digest,
        summary,
        provenance,
        retrieved: Some(retrieved),
        report: Some(report),
    })
}

/// Recomputes an answer's prompt digest from its stored inputs.
pub fn prompt_digest_of(summary: &str, query: &str, response_type: &str) -> String {
    answer_prompt(summary, query, response_type)
        .map(|p| p.digest())
        .unwrap_or_else(|_| prompt_digest(""))
}
