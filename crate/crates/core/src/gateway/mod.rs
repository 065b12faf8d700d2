//! Single entry point for every completion and embedding call.
//!
//! A [`Gateway`] is either live (an OpenAI-compatible HTTP provider) or a
//! scripted mock. Both share the same bounded-concurrency limiter and call
//! counters, so pipeline code never knows which one it is talking to.

mod http;
pub mod mock;
pub mod prompts;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use mock::{HashEmbedder, MockEntry, MockScript};
pub use prompts::{bindings, prompt_digest, Bindings, PromptError, PromptTemplate, RenderedPrompt, TemplateId};

use crate::vector::Embedding;
use http::HttpProvider;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GatewayError {
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("provider rejected credentials (HTTP {0})")]
    Auth(u16),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("mock script has no response for template {template}")]
    MockMiss { template: TemplateId },
    #[error("mock script: {0}")]
    Script(String),
    #[error("embed called with no texts")]
    EmptyInput,
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl GatewayError {
    /// Credential and transport problems, as opposed to bad input.
    pub fn is_provider_failure(&self) -> bool {
        matches!(
            self,
            GatewayError::MissingApiKey(_)
                | GatewayError::Auth(_)
                | GatewayError::Transport { .. }
                | GatewayError::Protocol(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GatewayMode {
    #[default]
    Live,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GatewayConfig {
    /// Base URL; `/chat/completions` and `/embeddings` are appended.
    pub endpoint: String,
    pub model: String,
    pub embedding_model: String,
    pub api_key_env: String,
    pub max_retries: u32,
    pub timeout_secs: u64,
    /// First backoff delay; doubles per retry up to `MAX_BACKOFF`.
    pub retry_base_ms: u64,
    /// Completion token ceiling sent with every request.
    pub max_tokens: u32,
    pub max_concurrency: usize,
    pub mode: GatewayMode,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1".into(),
            model: "gpt-4o-mini".into(),
            embedding_model: "all-MiniLM-L6-v2".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            max_retries: 3,
            timeout_secs: 60,
            retry_base_ms: 250,
            max_tokens: 4096,
            max_concurrency: 8,
            mode: GatewayMode::Live,
        }
    }
}

impl GatewayConfig {
    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}

/// Snapshot of how many provider calls a gateway has made.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallStats {
    pub completions: usize,
    pub embed_calls: usize,
    pub embedded_texts: usize,
}

enum Backend {
    Live(HttpProvider),
    Mock { script: MockScript, embedder: HashEmbedder },
}

struct Limiter {
    in_flight: Mutex<usize>,
    released: Condvar,
    bound: usize,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(bound: usize) -> Self {
        Self {
            in_flight: Mutex::new(0),
            released: Condvar::new(),
            bound: bound.max(1),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.bound {
            n = self.released.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.released.notify_one();
    }
}

pub struct Gateway {
    backend: Backend,
    dim: usize,
    limiter: Limiter,
    completions: AtomicUsize,
    embed_calls: AtomicUsize,
    embedded_texts: AtomicUsize,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.backend {
            Backend::Live(_) => "live",
            Backend::Mock { .. } => "mock",
        };
        f.debug_struct("Gateway").field("backend", &kind).field("dim", &self.dim).finish()
    }
}

impl Gateway {
    fn with_backend(backend: Backend, dim: usize, max_concurrency: usize) -> Self {
        Self {
            backend,
            dim,
            limiter: Limiter::new(max_concurrency),
            completions: AtomicUsize::new(0),
            embed_calls: AtomicUsize::new(0),
            embedded_texts: AtomicUsize::new(0),
        }
    }

    /// Live gateway. The API key is read from the environment at call time.
    pub fn live(config: GatewayConfig, dim: usize) -> Self {
        let bound = config.max_concurrency;
        Self::with_backend(Backend::Live(HttpProvider::new(config)), dim, bound)
    }

    pub fn mock(script: MockScript, dim: usize) -> Self {
        Self::with_backend(
            Backend::Mock {
                script,
                embedder: HashEmbedder::new(dim),
            },
            dim,
            usize::MAX,
        )
    }

    pub fn embedding_dim(&self) -> usize {
        self.dim
    }

    pub fn stats(&self) -> CallStats {
        CallStats {
            completions: self.completions.load(Ordering::SeqCst),
            embed_calls: self.embed_calls.load(Ordering::SeqCst),
            embedded_texts: self.embedded_texts.load(Ordering::SeqCst),
        }
    }

    pub fn complete(&self, prompt: &RenderedPrompt) -> Result<String, GatewayError> {
        let _permit = self.limiter.acquire();
        self.completions.fetch_add(1, Ordering::SeqCst);
        tracing::debug!(template = %prompt.template(), digest = %prompt.digest(), "completion");
        match &self.backend {
            Backend::Live(provider) => provider.complete(prompt.text()),
            Backend::Mock { script, .. } => script.respond(prompt).map(str::to_owned),
        }
    }

    pub fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>, GatewayError> {
        if texts.is_empty() {
            return Err(GatewayError::EmptyInput);
        }
        let _permit = self.limiter.acquire();
        self.embed_calls.fetch_add(1, Ordering::SeqCst);
        self.embedded_texts.fetch_add(texts.len(), Ordering::SeqCst);
        let vectors = match &self.backend {
            Backend::Live(provider) => provider.embed(texts)?,
            Backend::Mock { embedder, .. } => texts.iter().map(|t| embedder.embed(t.as_ref())).collect(),
        };
        if vectors.len() != texts.len() {
            return Err(GatewayError::Protocol(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                vectors.len()
            )));
        }
        if let Some(bad) = vectors.iter().find(|v| v.dim() != self.dim) {
            return Err(GatewayError::Protocol(format!(
                "embedding dimension {} does not match configured {}",
                bad.dim(),
                self.dim
            )));
        }
        Ok(vectors)
    }

    pub fn embed_one(&self, text: &str) -> Result<Embedding, GatewayError> {
        Ok(self.embed(&[text])?.remove(0))
    }

    /// Renders `template`, calls the model and hands the reply to `parse`.
    /// If parsing fails, re-prompts once with the template's format reminder.
    /// Returns `Ok(None)` when both replies are unparseable.
    pub fn complete_parsed<T>(
        &self,
        template: TemplateId,
        bindings: &Bindings<'_>,
        mut parse: impl FnMut(&str) -> Option<T>,
    ) -> Result<Option<T>, GatewayError> {
        let template = template.template();
        let first = self.complete(&template.render(bindings)?)?;
        if let Some(parsed) = parse(&first) {
            return Ok(Some(parsed));
        }
        let second = self.complete(&template.render_retry(bindings)?)?;
        Ok(parse(&second))
    }
}
