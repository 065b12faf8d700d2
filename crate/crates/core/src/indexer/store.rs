//! On-disk index layout.
//!
//! ```text
//! <dir>/manifest.json   format version, embedding dim, checksums
//! <dir>/graph.json      sorted nodes and edges
//! <dir>/vectors.json    node and chunk embeddings
//! <dir>/document.json   document metadata, segmentation and segments
//! ```

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{reassemble, Document, DocumentIndex, IndexerError, Segment, SegmentParams};
use crate::graph::KnowledgeGraph;
use crate::vector::{EntryKind, VectorIndex};

pub const FORMAT_VERSION: u32 = 1;
pub const DIGEST_ALGORITHM: &str = "sha256";

const MANIFEST: &str = "manifest.json";
const GRAPH: &str = "graph.json";
const VECTORS: &str = "vectors.json";
const DOCUMENT: &str = "document.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub format_version: u32,
    pub embedding_dim: usize,
    pub document_ids: Vec<String>,
    pub digest_algorithm: String,
    pub graph_checksum: String,
    pub vectors_checksum: String,
    pub document_checksum: String,
    /// Unix seconds.
    pub created_at: u64,
}

impl IndexManifest {
    pub(super) fn new(doc: &Document, embedding_dim: usize, created_at: u64) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            embedding_dim,
            document_ids: vec![doc.id.clone()],
            digest_algorithm: DIGEST_ALGORITHM.into(),
            graph_checksum: String::new(),
            vectors_checksum: String::new(),
            document_checksum: String::new(),
            created_at,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DocumentFile {
    document: Document,
    segment_params: SegmentParams,
    segments: Vec<Segment>,
}

struct Files {
    graph: String,
    vectors: String,
    document: String,
}

fn checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn serialize(index: &DocumentIndex) -> Files {
    let document = DocumentFile {
        document: index.document.clone(),
        segment_params: index.segment_params,
        segments: index.segments.clone(),
    };
    // Serializing plain data structures to a String cannot fail.
    Files {
        graph: serde_json::to_string_pretty(&index.graph).expect("graph serializes"),
        vectors: serde_json::to_string(&index.vectors).expect("vectors serialize"),
        document: serde_json::to_string_pretty(&document).expect("document serializes"),
    }
}

fn sealed_manifest(index: &DocumentIndex, files: &Files) -> IndexManifest {
    IndexManifest {
        graph_checksum: checksum(files.graph.as_bytes()),
        vectors_checksum: checksum(files.vectors.as_bytes()),
        document_checksum: checksum(files.document.as_bytes()),
        ..index.manifest.clone()
    }
}

/// Fills the manifest checksums from the canonical serialization.
pub(super) fn seal(index: &mut DocumentIndex) {
    let files = serialize(index);
    index.manifest = sealed_manifest(index, &files);
}

/// Writes into a sibling staging directory, then swaps it into place.
pub(super) fn save(index: &DocumentIndex, dir: &Path) -> Result<(), IndexerError> {
    let files = serialize(index);
    let manifest = sealed_manifest(index, &files);
    let name = dir
        .file_name()
        .ok_or_else(|| IndexerError::io(dir, std::io::Error::other("index path has no file name")))?;
    let parent = dir.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| IndexerError::io(parent, e))?;
    let staging = parent.join(format!(".{}.partial", name.to_string_lossy()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| IndexerError::io(&staging, e))?;
    }

    let write_all = || -> Result<(), IndexerError> {
        fs::create_dir(&staging).map_err(|e| IndexerError::io(&staging, e))?;
        let manifest_json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        for (file, body) in [
            (GRAPH, &files.graph),
            (VECTORS, &files.vectors),
            (DOCUMENT, &files.document),
            (MANIFEST, &manifest_json),
        ] {
            let path = staging.join(file);
            fs::write(&path, body).map_err(|e| IndexerError::io(&path, e))?;
        }
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(|e| IndexerError::io(dir, e))?;
        }
        fs::rename(&staging, dir).map_err(|e| IndexerError::io(dir, e))
    };
    write_all().inspect_err(|_| {
        let _ = fs::remove_dir_all(&staging);
    })
}

fn corrupt(dir: &Path, reason: impl Into<String>) -> IndexerError {
    IndexerError::Corrupt {
        path: dir.to_owned(),
        reason: reason.into(),
    }
}

fn read_checked(dir: &Path, file: &str, expected: &str) -> Result<String, IndexerError> {
    let path = dir.join(file);
    let body = fs::read_to_string(&path).map_err(|e| IndexerError::io(&path, e))?;
    if checksum(body.as_bytes()) != expected {
        return Err(corrupt(dir, format!("{file} checksum mismatch")));
    }
    Ok(body)
}

fn parse<T: serde::de::DeserializeOwned>(dir: &Path, file: &str, body: &str) -> Result<T, IndexerError> {
    serde_json::from_str(body).map_err(|e| corrupt(dir, format!("{file}: {e}")))
}

/// Loads and fully validates an index directory.
pub fn load_index(dir: &Path) -> Result<DocumentIndex, IndexerError> {
    let manifest_path = dir.join(MANIFEST);
    let raw = fs::read_to_string(&manifest_path).map_err(|e| IndexerError::io(&manifest_path, e))?;
    let manifest: IndexManifest = parse(dir, MANIFEST, &raw)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(IndexerError::IncompatibleVersion {
            found: manifest.format_version,
            expected: FORMAT_VERSION,
        });
    }
    if manifest.digest_algorithm != DIGEST_ALGORITHM {
        return Err(corrupt(dir, format!("unknown digest {}", manifest.digest_algorithm)));
    }

    let graph: KnowledgeGraph = parse(dir, GRAPH, &read_checked(dir, GRAPH, &manifest.graph_checksum)?)?;
    let vectors: VectorIndex = parse(dir, VECTORS, &read_checked(dir, VECTORS, &manifest.vectors_checksum)?)?;
    let document: DocumentFile = parse(dir, DOCUMENT, &read_checked(dir, DOCUMENT, &manifest.document_checksum)?)?;

    // Re-run insertion checks (dimension, norms, duplicate keys).
    let vectors = VectorIndex::from_entries(vectors.dim(), vectors.entries().to_vec())
        .map_err(|e| corrupt(dir, format!("{VECTORS}: {e}")))?;
    if vectors.dim() != manifest.embedding_dim {
        return Err(corrupt(
            dir,
            format!("vector dim {} != manifest dim {}", vectors.dim(), manifest.embedding_dim),
        ));
    }
    if manifest.document_ids != [document.document.id.clone()] {
        return Err(corrupt(dir, "manifest document ids do not match document.json"));
    }

    let keys = |kind| -> BTreeSet<&str> {
        vectors
            .entries()
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.key.as_str())
            .collect()
    };
    let node_ids: BTreeSet<&str> = graph.node_ids().map(|id| id.as_str()).collect();
    if keys(EntryKind::Node) != node_ids {
        return Err(corrupt(dir, "node embeddings do not match graph nodes"));
    }
    let segment_ids: BTreeSet<&str> = document.segments.iter().map(|s| s.id.as_str()).collect();
    if segment_ids.len() != document.segments.len() || keys(EntryKind::Chunk) != segment_ids {
        return Err(corrupt(dir, "chunk embeddings do not match segments"));
    }
    if reassemble(&document.segments, document.segment_params.overlap_chars) != document.document.text {
        return Err(corrupt(dir, "segments do not reassemble into the document text"));
    }

    Ok(DocumentIndex {
        manifest,
        document: document.document,
        segment_params: document.segment_params,
        segments: document.segments,
        graph,
        vectors,
    })
}
