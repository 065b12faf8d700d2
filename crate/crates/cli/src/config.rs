use std::path::{Path, PathBuf};

use anyhow::Context;
use causalrag_core::causal::DEFAULT_RESPONSE_TYPE;
use causalrag_core::gateway::{Gateway, GatewayConfig, GatewayMode, MockScript};
use causalrag_core::indexer::IndexConfig;
use causalrag_core::retriever::RetrievalParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_EMBEDDING_DIM: usize = 384;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub index_root: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub report_out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub gateway: GatewayConfig,
    pub retrieval: RetrievalParams,
    pub index: IndexConfig,
    pub embedding_dim: usize,
    pub response_type: String,
    /// Scripted responses used when `gateway.mode` is `mock`.
    pub mock_script: Option<PathBuf>,
    pub paths: Paths,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            gateway: GatewayConfig::default(),
            retrieval: RetrievalParams::default(),
            index: IndexConfig::default(),
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            response_type: DEFAULT_RESPONSE_TYPE.to_string(),
            mock_script: None,
            paths: Paths::default(),
        }
    }
}

fn rebase(base: &Path, path: &mut Option<PathBuf>) {
    if let Some(p) = path {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
}

impl AppConfig {
    /// Reads a TOML file. Relative paths inside it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))
            .map_err(CliError::input)?;
        let mut config: AppConfig = toml::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))
            .map_err(CliError::input)?;
        let base = path.parent().unwrap_or(Path::new("."));
        rebase(base, &mut config.mock_script);
        rebase(base, &mut config.paths.index_root);
        rebase(base, &mut config.paths.dataset);
        rebase(base, &mut config.paths.report_out);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.embedding_dim == 0 {
            return Err(CliError::usage("embedding_dim must be positive"));
        }
        if self.retrieval.k == 0 {
            return Err(CliError::usage("retrieval.k must be at least 1"));
        }
        self.index.segment.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(())
    }

    pub fn gateway(&self) -> Result<Gateway, CliError> {
        match self.gateway.mode {
            GatewayMode::Live => Ok(Gateway::live(self.gateway.clone(), self.embedding_dim)),
            GatewayMode::Mock => {
                let path = self
                    .mock_script
                    .as_deref()
                    .ok_or_else(|| CliError::usage("mock mode needs a mock script (--mock or mock_script)"))?;
                let script = MockScript::load(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
                Ok(Gateway::mock(script, self.embedding_dim))
            }
        }
    }
}
