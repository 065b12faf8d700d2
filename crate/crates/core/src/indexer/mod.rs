//! Offline indexing: document → segments → extracted graph → embeddings →
//! persisted per-document index directory.

mod extract;
mod segment;
mod store;

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use extract::{extract_graph, parse_extraction, ExtractedItem, Extraction, ParsedExtraction};
pub use segment::{reassemble, segment, segment_id, Segment, SegmentParams};
pub use store::{load_index, IndexManifest, DIGEST_ALGORITHM, FORMAT_VERSION};

use crate::gateway::{Gateway, GatewayError};
use crate::graph::{GraphError, GraphNode, KnowledgeGraph};
use crate::text;
use crate::vector::{EntryKind, VectorError, VectorIndex};

#[derive(Debug, thiserror::Error)]
pub enum IndexerError {
    #[error("segment size {max_chars} must exceed overlap {overlap_chars}")]
    InvalidSegmentation { max_chars: usize, overlap_chars: usize },
    #[error("document text is empty")]
    EmptyDocument,
    #[error("invalid document id {0:?}")]
    InvalidDocumentId(String),
    #[error("no segments to extract from")]
    NoSegments,
    #[error("graph extraction failed: all {segments} segment responses were unparseable")]
    ExtractionFailed { segments: usize },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] crate::gateway::PromptError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("corrupt index at {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("index format version {found} is not supported (expected {expected})")]
    IncompatibleVersion { found: u32, expected: u32 },
}

impl IndexerError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocumentMeta {
    pub domain: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    pub text: String,
    pub meta: DocumentMeta,
}

impl Document {
    /// Document ids double as index directory names, so they must be
    /// non-empty and free of path separators.
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        text: impl Into<String>,
        domain: impl Into<String>,
    ) -> Result<Self, IndexerError> {
        let (id, text) = (id.into(), text.into());
        if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\']) || id.chars().any(char::is_control) {
            return Err(IndexerError::InvalidDocumentId(id));
        }
        if text.trim().is_empty() {
            return Err(IndexerError::EmptyDocument);
        }
        Ok(Self {
            meta: DocumentMeta {
                domain: domain.into(),
                token_count: text::token_count(&text),
            },
            id,
            title: title.into(),
            text,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndexConfig {
    pub segment: SegmentParams,
    /// Texts per embedding request.
    pub embed_batch: usize,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            segment: SegmentParams::default(),
            embed_batch: 64,
        }
    }
}

/// Everything persisted for one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentIndex {
    pub manifest: IndexManifest,
    pub document: Document,
    pub segment_params: SegmentParams,
    pub segments: Vec<Segment>,
    pub graph: KnowledgeGraph,
    pub vectors: VectorIndex,
}

impl DocumentIndex {
    pub fn segment(&self, id: &str) -> Option<&Segment> {
        self.segments.iter().find(|s| s.id == id)
    }

    pub fn save(&self, dir: &Path) -> Result<(), IndexerError> {
        store::save(self, dir)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BuildReport {
    pub warnings: Vec<String>,
    pub malformed_lines: usize,
}

/// Text embedded for a node: `label: description`, or the bare label.
pub fn node_embedding_text(node: &GraphNode) -> String {
    if node.description.is_empty() {
        node.label.clone()
    } else {
        format!("{}: {}", node.label, node.description)
    }
}

fn embed_batched(gateway: &Gateway, texts: &[String], batch: usize) -> Result<Vec<crate::vector::Embedding>, GatewayError> {
    let batches = texts
        .par_chunks(batch.max(1))
        .map(|chunk| gateway.embed(chunk))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(batches.into_iter().flatten().collect())
}

/// Unix seconds, or `SOURCE_DATE_EPOCH` when set so that reproducible builds
/// produce identical manifests.
fn build_timestamp() -> u64 {
    if let Some(epoch) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.trim().parse().ok()) {
        return epoch;
    }
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Builds the full in-memory index for one document.
pub fn build_index(
    doc: &Document,
    config: &IndexConfig,
    gateway: &Gateway,
) -> Result<(DocumentIndex, BuildReport), IndexerError> {
    let segments = segment(doc, config.segment)?;
    let extraction = extract_graph(&segments, gateway)?;
    let graph = extraction.graph;

    let mut vectors = VectorIndex::new(gateway.embedding_dim())?;
    let node_texts: Vec<String> = graph.nodes().map(node_embedding_text).collect();
    if !node_texts.is_empty() {
        let embedded = embed_batched(gateway, &node_texts, config.embed_batch)?;
        for (node, vector) in graph.nodes().zip(embedded) {
            vectors.insert(node.id.as_str(), EntryKind::Node, vector)?;
        }
    }
    let chunk_texts: Vec<String> = segments.iter().map(|s| s.text.clone()).collect();
    let embedded = embed_batched(gateway, &chunk_texts, config.embed_batch)?;
    for (seg, vector) in segments.iter().zip(embedded) {
        vectors.insert(seg.id.as_str(), EntryKind::Chunk, vector)?;
    }

    let created_at = build_timestamp();
    let mut index = DocumentIndex {
        manifest: IndexManifest::new(doc, gateway.embedding_dim(), created_at),
        document: doc.clone(),
        segment_params: config.segment,
        segments,
        graph,
        vectors,
    };
    store::seal(&mut index);
    let report = BuildReport {
        warnings: extraction.warnings,
        malformed_lines: extraction.malformed_lines,
    };
    Ok((index, report))
}

/// Builds and persists the index under `dir`. Nothing is left behind on
/// failure.
pub fn build_index_to(
    doc: &Document,
    config: &IndexConfig,
    gateway: &Gateway,
    dir: &Path,
) -> Result<(DocumentIndex, BuildReport), IndexerError> {
    let (index, report) = build_index(doc, config, gateway)?;
    index.save(dir)?;
    Ok((index, report))
}
