//! Scripted, deterministic stand-in for a model provider.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::{RenderedPrompt, TemplateId};
use super::GatewayError;
use crate::text;
use crate::vector::Embedding;

/// One scripted response. With neither `digest` nor `contains` set the entry
/// answers every prompt of its template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockEntry {
    pub template: TemplateId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contains: Option<String>,
    pub response: String,
}

/// Canned responses keyed by template and prompt.
///
/// Lookup order: exact digest match, then the first `contains` entry whose
/// needle occurs in the prompt, then a template-wide entry, then the global
/// fallback. The same rendered prompt therefore always gets the same reply.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MockScript {
    #[serde(default)]
    pub entries: Vec<MockEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
}

impl MockScript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let raw = fs::read_to_string(path).map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&raw).map_err(|e| GatewayError::Script(format!("{}: {e}", path.display())))
    }

    pub fn with_fallback(mut self, response: impl Into<String>) -> Self {
        self.fallback = Some(response.into());
        self
    }

    /// Responds to exactly this rendered prompt.
    pub fn on_prompt(mut self, prompt: &RenderedPrompt, response: impl Into<String>) -> Self {
        self.entries.push(MockEntry {
            template: prompt.template(),
            digest: Some(prompt.digest()),
            contains: None,
            response: response.into(),
        });
        self
    }

    /// Responds to prompts of `template` that contain `needle`.
    pub fn on_contains(mut self, template: TemplateId, needle: impl Into<String>, response: impl Into<String>) -> Self {
        self.entries.push(MockEntry {
            template,
            digest: None,
            contains: Some(needle.into()),
            response: response.into(),
        });
        self
    }

    /// Responds to every prompt of `template`.
    pub fn on_template(mut self, template: TemplateId, response: impl Into<String>) -> Self {
        self.entries.push(MockEntry {
            template,
            digest: None,
            contains: None,
            response: response.into(),
        });
        self
    }

    pub fn respond(&self, prompt: &RenderedPrompt) -> Result<&str, GatewayError> {
        let template = prompt.template();
        let of_template = || self.entries.iter().filter(move |e| e.template == template);
        let digest = prompt.digest();
        of_template()
            .find(|e| e.digest.as_deref() == Some(digest.as_str()))
            .or_else(|| {
                of_template().find(|e| {
                    e.digest.is_none()
                        && e.contains
                            .as_deref()
                            .is_some_and(|needle| prompt.text().contains(needle))
                })
            })
            .or_else(|| of_template().find(|e| e.digest.is_none() && e.contains.is_none()))
            .map(|e| e.response.as_str())
            .or(self.fallback.as_deref())
            .ok_or(GatewayError::MockMiss { template })
    }
}

/// Deterministic bag-of-words embedder.
///
/// Each lowercased word maps to a pseudo-random unit-scale vector drawn from
/// ChaCha8 seeded with SHA-256(seed, word); a text embeds as the sum of its
/// word vectors plus a small whole-text component, so texts sharing words
/// are similar and distinct texts never coincide. The output is L2
/// normalized and identical on every platform.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
}

const WHOLE_TEXT_WEIGHT: f64 = 0.1;

impl HashEmbedder {
    pub const DEFAULT_SEED: u64 = 0x5eed_cafe;

    pub fn new(dim: usize) -> Self {
        Self::with_seed(dim, Self::DEFAULT_SEED)
    }

    pub fn with_seed(dim: usize, seed: u64) -> Self {
        Self { dim, seed }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn token_vector(&self, domain: u8, token: &str, weight: f64, into: &mut [f64]) {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update([domain]);
        hasher.update(token.as_bytes());
        let mut rng = ChaCha8Rng::from_seed(hasher.finalize().into());
        for slot in into.iter_mut() {
            // 53 random bits mapped onto [-1, 1).
            let unit = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
            *slot += weight * (2.0 * unit - 1.0);
        }
    }

    pub fn embed(&self, text_in: &str) -> Embedding {
        let mut values = vec![0.0; self.dim];
        for word in text::words(text_in) {
            self.token_vector(b'w', &word, 1.0, &mut values);
        }
        self.token_vector(b't', text_in, WHOLE_TEXT_WEIGHT, &mut values);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        Embedding::new(values)
    }
}
