use std::fmt;

use causalrag_core::causal::CausalError;
use causalrag_core::eval::EvalError;
use causalrag_core::gateway::GatewayError;
use causalrag_core::indexer::IndexerError;
use causalrag_core::retriever::RetrievalError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PROVIDER: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

/// An error paired with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: format!("{message:#}"),
        }
    }

    pub fn provider(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_PROVIDER,
            message: message.to_string(),
        }
    }

    pub fn usage(message: impl fmt::Display) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.to_string(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn gateway_code(e: &GatewayError) -> i32 {
    if e.is_provider_failure() {
        EXIT_PROVIDER
    } else {
        EXIT_INPUT
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        Self {
            code: gateway_code(&e),
            message: e.to_string(),
        }
    }
}

impl From<IndexerError> for CliError {
    fn from(e: IndexerError) -> Self {
        let code = match &e {
            IndexerError::Gateway(g) => gateway_code(g),
            IndexerError::ExtractionFailed { .. } => EXIT_PROVIDER,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn retrieval_code(e: &RetrievalError) -> i32 {
    match e {
        RetrievalError::Gateway(g) => gateway_code(g),
        _ => EXIT_INPUT,
    }
}

impl From<CausalError> for CliError {
    fn from(e: CausalError) -> Self {
        let code = match e.root() {
            CausalError::Gateway(g) => gateway_code(g),
            CausalError::Retrieval(r) => retrieval_code(r),
            CausalError::DiscoveryFailed | CausalError::SummaryFailed => EXIT_PROVIDER,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::Gateway(g) => gateway_code(g),
            EvalError::Index(IndexerError::Gateway(g)) => gateway_code(g),
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}
