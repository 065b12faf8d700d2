//! Evaluation harness: retrieval metrics, LLM judges, grounded question
//! generation, baseline-vs-causal runs and the k×s parameter sweep.

pub mod judge;
pub mod metrics;
pub mod questions;
mod run;

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use judge::{faithfulness, judge_matches_and_causality, match_reference, parse_score, parse_verdict, JudgeMode, JudgedItems};
pub use metrics::{composite, context_precision, context_recall, Ratio, Recall, RetrievedContextItem};
pub use questions::{generate_questions, parse_questions, GeneratedQuestion, QuestionSet, DEFAULT_QUESTION_COUNT};
pub use run::{run_eval, sweep, Corpus, EvalOptions, MetricsReport, SampleResult, SweepCell, SweepGrid, System};

use crate::gateway::{GatewayError, PromptError};
use crate::indexer::IndexerError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("reference set is empty")]
    EmptyReferenceSet,
    #[error("matched reference {0:?} is not in the reference set")]
    UnknownReference(String),
    #[error("matched item {0:?} has no causal verdict")]
    UnjudgedItem(String),
    #[error("annotated mode needs annotations for question {question:?}")]
    MissingAnnotations { question: String },
    #[error("question count must be at least 1")]
    ZeroQuestions,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("{path}:{line}: {message}")]
    Dataset { path: PathBuf, line: usize, message: String },
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Index(#[from] IndexerError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSample {
    pub document_id: String,
    pub question: String,
    pub reference_set: Vec<String>,
    /// Reference → causally relevant. References left out count as relevant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<BTreeMap<String, bool>>,
}

impl EvalSample {
    pub fn validate(&self) -> Result<(), String> {
        if self.document_id.trim().is_empty() {
            return Err("document_id is empty".into());
        }
        if self.question.trim().is_empty() {
            return Err("question is empty".into());
        }
        if self.reference_set.is_empty() {
            return Err("reference_set is empty".into());
        }
        if let Some(stray) = self
            .annotations
            .iter()
            .flat_map(|a| a.keys())
            .find(|k| !self.reference_set.contains(k))
        {
            return Err(format!("annotation {stray:?} is not in reference_set"));
        }
        Ok(())
    }
}

/// Reads a JSON Lines dataset, one [`EvalSample`] per non-blank line.
pub fn load_dataset(path: &Path) -> Result<Vec<EvalSample>, EvalError> {
    let io_err = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut samples = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| EvalError::Dataset {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let sample: EvalSample = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        sample.validate().map_err(bad)?;
        samples.push(sample);
    }
    Ok(samples)
}
