//! Dense embeddings and an exact cosine-similarity top-k index.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum VectorError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("vector has zero norm")]
    ZeroNorm,
    #[error("vector contains a non-finite component")]
    NonFinite,
    #[error("embedding dimension must be positive")]
    ZeroDimension,
    #[error("duplicate {kind:?} key {key}")]
    DuplicateKey { key: String, kind: EntryKind },
}

/// A fixed-length real vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for Embedding {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// `dot(a, b) / (|a| |b|)`, clamped into [-1, 1] against rounding drift.
pub fn cosine_similarity(a: &Embedding, b: &Embedding) -> Result<f64, VectorError> {
    if a.dim() != b.dim() {
        return Err(VectorError::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(VectorError::ZeroNorm);
    }
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryKind {
    Node,
    Chunk,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub key: String,
    pub kind: EntryKind,
    pub vector: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredKey {
    pub key: String,
    pub score: f64,
}

/// Descending score, then ascending key.
fn rank_order(a: &ScoredKey, b: &ScoredKey) -> Ordering {
    b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key))
}

/// Exhaustive-scan vector store over node and chunk embeddings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<IndexEntry>,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Result<Self, VectorError> {
        if dim == 0 {
            return Err(VectorError::ZeroDimension);
        }
        Ok(Self {
            dim,
            entries: Vec::new(),
        })
    }

    /// Rebuilds an index from persisted entries, re-checking every invariant.
    pub fn from_entries(dim: usize, entries: Vec<IndexEntry>) -> Result<Self, VectorError> {
        let mut index = Self::new(dim)?;
        for entry in entries {
            index.insert(entry.key, entry.kind, entry.vector)?;
        }
        Ok(index)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn count(&self, kind: EntryKind) -> usize {
        self.entries.iter().filter(|e| e.kind == kind).count()
    }

    pub fn get(&self, key: &str, kind: EntryKind) -> Option<&IndexEntry> {
        self.entries.iter().find(|e| e.kind == kind && e.key == key)
    }

    pub fn insert(&mut self, key: impl Into<String>, kind: EntryKind, vector: Embedding) -> Result<(), VectorError> {
        let key = key.into();
        self.check_vector(&vector)?;
        if self.get(&key, kind).is_some() {
            return Err(VectorError::DuplicateKey { key, kind });
        }
        self.entries.push(IndexEntry { key, kind, vector });
        Ok(())
    }

    fn check_vector(&self, vector: &Embedding) -> Result<(), VectorError> {
        if vector.dim() != self.dim {
            return Err(VectorError::DimensionMismatch {
                expected: self.dim,
                actual: vector.dim(),
            });
        }
        if vector.values().iter().any(|v| !v.is_finite()) {
            return Err(VectorError::NonFinite);
        }
        if vector.norm() == 0.0 {
            return Err(VectorError::ZeroNorm);
        }
        Ok(())
    }

    /// The `k` entries of `kind` most similar to `query`, by descending
    /// cosine similarity with ties broken by ascending key.
    pub fn top_k(&self, query: &Embedding, k: usize, kind: EntryKind) -> Result<Vec<ScoredKey>, VectorError> {
        self.check_vector(query)?;
        let mut scored = self
            .entries
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| {
                cosine_similarity(query, &e.vector).map(|score| ScoredKey {
                    key: e.key.clone(),
                    score,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let k = k.min(scored.len());
        if k == 0 {
            return Ok(Vec::new());
        }
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, rank_order);
            scored.truncate(k);
        }
        scored.sort_by(rank_order);
        Ok(scored)
    }
}
