//! OpenAI-compatible chat-completions and embeddings client.

use std::time::Duration;

use serde::Deserialize;
use serde_json::json;
use ureq::Agent;

use super::{GatewayConfig, GatewayError};
use crate::vector::Embedding;

const MAX_BACKOFF: Duration = Duration::from_secs(8);

pub(super) struct HttpProvider {
    config: GatewayConfig,
    agent: Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    #[serde(default)]
    index: Option<usize>,
    embedding: Vec<f64>,
}

enum Attempt<T> {
    Done(T),
    Retry(String),
}

impl HttpProvider {
    pub(super) fn new(config: GatewayConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout()))
            .http_status_as_error(false)
            .build()
            .into();
        Self { config, agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.config.endpoint.trim_end_matches('/'), path)
    }

    fn api_key(&self) -> Result<String, GatewayError> {
        std::env::var(&self.config.api_key_env).map_err(|_| GatewayError::MissingApiKey(self.config.api_key_env.clone()))
    }

    fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64 << attempt.min(16);
        Duration::from_millis(self.config.retry_base_ms.saturating_mul(factor)).min(MAX_BACKOFF)
    }

    fn post<T: serde::de::DeserializeOwned>(&self, path: &str, body: serde_json::Value) -> Result<T, GatewayError> {
        let key = self.api_key()?;
        let url = self.url(path);
        let mut attempt = 0;
        loop {
            match self.post_once(&url, &key, &body)? {
                Attempt::Done(value) => return Ok(value),
                Attempt::Retry(message) if attempt >= self.config.max_retries => {
                    return Err(GatewayError::Transport {
                        attempts: attempt + 1,
                        message,
                    })
                }
                Attempt::Retry(message) => {
                    tracing::warn!(%url, attempt, %message, "retrying provider call");
                    std::thread::sleep(self.backoff(attempt));
                    attempt += 1;
                }
            }
        }
    }

    fn post_once<T: serde::de::DeserializeOwned>(
        &self,
        url: &str,
        key: &str,
        body: &serde_json::Value,
    ) -> Result<Attempt<T>, GatewayError> {
        let mut response = match self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {key}"))
            .send_json(body)
        {
            Ok(r) => r,
            Err(e) => return Ok(Attempt::Retry(e.to_string())),
        };
        let status = response.status().as_u16();
        match status {
            200..=299 => response
                .body_mut()
                .read_json::<T>()
                .map(Attempt::Done)
                .map_err(|e| GatewayError::Protocol(e.to_string())),
            401 | 403 => Err(GatewayError::Auth(status)),
            408 | 429 | 500..=599 => Ok(Attempt::Retry(format!("HTTP {status}"))),
            _ => {
                let detail = response.body_mut().read_to_string().unwrap_or_default();
                Err(GatewayError::Protocol(format!("HTTP {status}: {detail}")))
            }
        }
    }

    pub(super) fn complete(&self, prompt: &str) -> Result<String, GatewayError> {
        let body = json!({
            "model": self.config.model,
            "messages": [{ "role": "user", "content": prompt }],
            "max_tokens": self.config.max_tokens,
            "temperature": 0,
        });
        let response: ChatResponse = self.post("chat/completions", body)?;
        response
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| GatewayError::Protocol("completion has no message content".into()))
    }

    pub(super) fn embed<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>, GatewayError> {
        let input: Vec<&str> = texts.iter().map(AsRef::as_ref).collect();
        let body = json!({ "model": self.config.embedding_model, "input": input });
        let mut response: EmbeddingResponse = self.post("embeddings", body)?;
        response.data.sort_by_key(|d| d.index.unwrap_or(0));
        Ok(response.data.into_iter().map(|d| Embedding::new(d.embedding)).collect())
    }
}
