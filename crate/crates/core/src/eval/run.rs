use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::judge::{faithfulness, judge_matches_and_causality, JudgeMode};
use super::metrics::{composite, context_precision, context_recall, Ratio, RetrievedContextItem};
use super::{EvalError, EvalSample};
use crate::causal::{self, answer_prompt, CausalError};
use crate::gateway::{Gateway, GatewayError};
use crate::indexer::{load_index, DocumentIndex};
use crate::retriever::{retrieve_baseline, ContextStatement, RetrievalError, RetrievalParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    Causal,
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOptions {
    pub system: System,
    pub mode: JudgeMode,
    pub params: RetrievalParams,
    pub response_type: String,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            system: System::Causal,
            mode: JudgeMode::Annotated,
            params: RetrievalParams::default(),
            response_type: causal::DEFAULT_RESPONSE_TYPE.to_string(),
        }
    }
}

/// One index per document, keyed by document id.
#[derive(Debug, Default)]
pub struct Corpus {
    indexes: BTreeMap<String, DocumentIndex>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, index: DocumentIndex) {
        self.indexes.insert(index.document.id.clone(), index);
    }

    pub fn get(&self, document_id: &str) -> Option<&DocumentIndex> {
        self.indexes.get(document_id)
    }

    pub fn len(&self) -> usize {
        self.indexes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indexes.is_empty()
    }

    pub fn document_ids(&self) -> impl Iterator<Item = &str> {
        self.indexes.keys().map(String::as_str)
    }

    /// Loads `root/<id>` for every document the dataset mentions. Documents
    /// without an index directory are left out; their samples fail at run
    /// time.
    pub fn load_for(root: &Path, dataset: &[EvalSample]) -> Result<Self, EvalError> {
        let mut corpus = Self::new();
        let ids: std::collections::BTreeSet<&str> = dataset.iter().map(|s| s.document_id.as_str()).collect();
        for id in ids {
            let dir = root.join(id);
            if dir.is_dir() {
                corpus.insert(load_index(&dir)?);
            } else {
                tracing::warn!(document = id, "no index directory");
            }
        }
        Ok(corpus)
    }
}

impl FromIterator<DocumentIndex> for Corpus {
    fn from_iter<I: IntoIterator<Item = DocumentIndex>>(iter: I) -> Self {
        let mut corpus = Self::new();
        for index in iter {
            corpus.insert(index);
        }
        corpus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub document_id: String,
    pub question: String,
    pub context_recall: Option<f64>,
    pub recall_ratio: Option<Ratio>,
    pub context_precision: Option<f64>,
    pub precision_ratio: Option<Ratio>,
    pub faithfulness: Option<f64>,
    pub n_retrieved: usize,
    pub undefined_verdicts: usize,
    pub answer: Option<String>,
    pub items: Vec<RetrievedContextItem>,
    pub error: Option<String>,
    /// Failure came from the provider (credentials, transport).
    #[serde(default)]
    pub provider_failure: bool,
}

impl SampleResult {
    fn failed(sample: &EvalSample, error: SampleError) -> Self {
        Self {
            document_id: sample.document_id.clone(),
            question: sample.question.clone(),
            context_recall: None,
            recall_ratio: None,
            context_precision: None,
            precision_ratio: None,
            faithfulness: None,
            n_retrieved: 0,
            undefined_verdicts: 0,
            answer: None,
            items: Vec::new(),
            provider_failure: error.provider,
            error: Some(error.message),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    pub fn composite(&self) -> Option<f64> {
        composite(self.context_recall, self.context_precision, self.faithfulness)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub system: System,
    pub mode: JudgeMode,
    pub params: RetrievalParams,
    pub samples: usize,
    pub failures: usize,
    pub context_recall: Option<f64>,
    pub context_precision: Option<f64>,
    pub faithfulness: Option<f64>,
    pub n_retrieved: usize,
    pub undefined_precision: usize,
    pub undefined_faithfulness: usize,
    pub undefined_verdicts: usize,
    pub per_sample: Vec<SampleResult>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl MetricsReport {
    fn aggregate(options: &EvalOptions, per_sample: Vec<SampleResult>) -> Self {
        let ok = || per_sample.iter().filter(|r| r.is_ok());
        Self {
            system: options.system,
            mode: options.mode,
            params: options.params,
            samples: per_sample.len(),
            failures: per_sample.iter().filter(|r| !r.is_ok()).count(),
            context_recall: mean(ok().filter_map(|r| r.context_recall)),
            context_precision: mean(ok().filter_map(|r| r.context_precision)),
            faithfulness: mean(ok().filter_map(|r| r.faithfulness)),
            n_retrieved: ok().map(|r| r.n_retrieved).sum(),
            undefined_precision: ok().filter(|r| r.context_precision.is_none()).count(),
            undefined_faithfulness: ok().filter(|r| r.faithfulness.is_none()).count(),
            undefined_verdicts: ok().map(|r| r.undefined_verdicts).sum(),
            per_sample,
        }
    }

    /// Mean per-sample composite over successful samples.
    pub fn mean_composite(&self) -> Option<f64> {
        mean(self.per_sample.iter().filter(|r| r.is_ok()).filter_map(SampleResult::composite))
    }

    pub fn provider_failures(&self) -> usize {
        self.per_sample.iter().filter(|r| r.provider_failure).count()
    }
}

struct SampleError {
    message: String,
    provider: bool,
}

impl SampleError {
    fn input(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
            provider: false,
        }
    }
}

impl From<GatewayError> for SampleError {
    fn from(e: GatewayError) -> Self {
        Self {
            provider: e.is_provider_failure(),
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for SampleError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Gateway(g) => g.into(),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<RetrievalError> for SampleError {
    fn from(e: RetrievalError) -> Self {
        match e {
            RetrievalError::Gateway(g) => g.into(),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<CausalError> for SampleError {
    fn from(e: CausalError) -> Self {
        let provider = match e.root() {
            CausalError::Gateway(g) => g.is_provider_failure(),
            CausalError::Retrieval(RetrievalError::Gateway(g)) => g.is_provider_failure(),
            _ => false,
        };
        Self {
            message: e.to_string(),
            provider,
        }
    }
}

/// Context statements and the generated answer for one sample.
fn retrieve_and_answer(
    sample: &EvalSample,
    index: &DocumentIndex,
    options: &EvalOptions,
    gateway: &Gateway,
) -> Result<(Vec<ContextStatement>, String), SampleError> {
    match options.system {
        System::Causal => {
            let answer = causal::answer(&sample.question, index, options.params, &options.response_type, gateway)?;
            let statements = match (&answer.report, &answer.retrieved) {
                (Some(report), Some(retrieved)) => report.context_statements(&retrieved.subgraph),
                _ => Vec::new(),
            };
            Ok((statements, answer.text))
        }
        System::Baseline => {
            let chunks = retrieve_baseline(&sample.question, index, options.params.k, gateway)?;
            let context = chunks
                .chunks
                .iter()
                .map(|c| c.text.as_str())
                .collect::<Vec<_>>()
                .join("\n\n");
            let prompt = answer_prompt(&context, &sample.question, &options.response_type)
                .map_err(|e| SampleError::input(e.to_string()))?;
            let text = gateway.complete(&prompt)?;
            Ok((chunks.statements(), text))
        }
    }
}

fn evaluate_sample(
    sample: &EvalSample,
    corpus: &Corpus,
    options: &EvalOptions,
    gateway: &Gateway,
) -> Result<SampleResult, SampleError> {
    let index = corpus
        .get(&sample.document_id)
        .ok_or_else(|| SampleError::input(format!("no index for document {}", sample.document_id)))?;
    let (statements, answer) = retrieve_and_answer(sample, index, options, gateway)?;

    let own_prefix = format!("{}/", sample.document_id);
    if let Some(stray) = statements
        .iter()
        .flat_map(|s| &s.sources)
        .find(|src| !src.starts_with(&own_prefix))
    {
        return Err(SampleError::input(format!(
            "context segment {stray} does not belong to document {}",
            sample.document_id
        )));
    }

    let judged = judge_matches_and_causality(&statements, sample, options.mode, gateway)?;
    let recall = context_recall(&judged.items, &sample.reference_set)?;
    // Items without a verdict are excluded from precision.
    let decided: Vec<RetrievedContextItem> = judged
        .items
        .iter()
        .filter(|i| i.matched_reference.is_none() || i.judged_causal.is_some())
        .cloned()
        .collect();
    let precision = context_precision(&decided)?;
    let faith = faithfulness(&answer, &index.document.text, gateway)?;

    Ok(SampleResult {
        document_id: sample.document_id.clone(),
        question: sample.question.clone(),
        context_recall: Some(recall.ratio.value()),
        recall_ratio: Some(recall.ratio),
        context_precision: precision.map(Ratio::value),
        precision_ratio: precision,
        faithfulness: faith,
        n_retrieved: judged.items.len(),
        undefined_verdicts: judged.undefined_verdicts,
        answer: Some(answer),
        items: judged.items,
        error: None,
        provider_failure: false,
    })
}

/// Evaluates every sample. Samples run in parallel; results keep dataset
/// order. A failing sample is recorded and does not stop the run.
pub fn run_eval(corpus: &Corpus, dataset: &[EvalSample], options: &EvalOptions, gateway: &Gateway) -> MetricsReport {
    let per_sample: Vec<SampleResult> = dataset
        .par_iter()
        .map(|sample| {
            evaluate_sample(sample, corpus, options, gateway).unwrap_or_else(|e| {
                tracing::warn!(question = %sample.question, error = %e.message, "sample failed");
                SampleResult::failed(sample, e)
            })
        })
        .collect();
    MetricsReport::aggregate(options, per_sample)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub k: usize,
    pub s: usize,
    /// Undefined when any sample failed or nothing was scored.
    pub composite: Option<f64>,
    pub failures: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub system: System,
    pub mode: JudgeMode,
    pub k_values: Vec<usize>,
    pub s_values: Vec<usize>,
    /// Row-major over `k_values` then `s_values`.
    pub cells: Vec<SweepCell>,
}

impl SweepGrid {
    pub fn cell(&self, k: usize, s: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.k == k && c.s == s)
    }
}

/// Runs [`run_eval`] for every (k, s) pair with the remaining options fixed.
pub fn sweep(
    corpus: &Corpus,
    dataset: &[EvalSample],
    k_values: &[usize],
    s_values: &[usize],
    options: &EvalOptions,
    gateway: &Gateway,
) -> Result<SweepGrid, EvalError> {
    if k_values.is_empty() || s_values.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let mut cells = Vec::with_capacity(k_values.len() * s_values.len());
    for &k in k_values {
        for &s in s_values {
            let cell = match RetrievalParams::new(k, s) {
                Err(e) => SweepCell {
                    k,
                    s,
                    composite: None,
                    failures: dataset.len(),
                    error: Some(e.to_string()),
                },
                Ok(params) => {
                    let report = run_eval(corpus, dataset, &EvalOptions { params, ..options.clone() }, gateway);
                    let error = report.per_sample.iter().find_map(|r| r.error.clone());
                    SweepCell {
                        k,
                        s,
                        composite: if report.failures == 0 { report.mean_composite() } else { None },
                        failures: report.failures,
                        error,
                    }
                }
            };
            cells.push(cell);
        }
    }
    Ok(SweepGrid {
        system: options.system,
        mode: options.mode,
        k_values: k_values.to_vec(),
        s_values: s_values.to_vec(),
        cells,
    })
}
