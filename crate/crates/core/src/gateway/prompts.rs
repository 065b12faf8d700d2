//! The prompt template registry.
//!
//! Every LLM interaction in the pipeline renders one of the templates below.
//! Placeholders are written `{name}` and are substituted verbatim in a single
//! pass over the template body, so braces inside supplied values are never
//! re-interpreted. [`RenderedPrompt`] can only be produced here.
//!
//! The causal discovery and causal summary bodies follow the section layout
//! of the published prompts (role, goal, data, format). Their elided prose is
//! reconstructed; the other five templates are written in the same style.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("template {template} is missing bindings for: {}", missing.join(", "))]
    MissingPlaceholders { template: TemplateId, missing: Vec<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    GraphExtraction,
    CausalDiscovery,
    CausalSummary,
    AnswerGeneration,
    QuestionGeneration,
    FaithfulnessJudge,
    CausalRelevanceJudge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::GraphExtraction,
        TemplateId::CausalDiscovery,
        TemplateId::CausalSummary,
        TemplateId::AnswerGeneration,
        TemplateId::QuestionGeneration,
        TemplateId::FaithfulnessJudge,
        TemplateId::CausalRelevanceJudge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::GraphExtraction => "graph_extraction",
            TemplateId::CausalDiscovery => "causal_discovery",
            TemplateId::CausalSummary => "causal_summary",
            TemplateId::AnswerGeneration => "answer_generation",
            TemplateId::QuestionGeneration => "question_generation",
            TemplateId::FaithfulnessJudge => "faithfulness_judge",
            TemplateId::CausalRelevanceJudge => "causal_relevance_judge",
        }
    }

    pub fn template(self) -> &'static PromptTemplate {
        &REGISTRY[self as usize]
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub required_placeholders: &'static [&'static str],
    /// Appended when a response could not be parsed and the call is retried.
    pub format_reminder: &'static str,
}

/// A prompt ready to send. Carries the template it was rendered from so the
/// mock gateway and error messages can name it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedPrompt {
    template: TemplateId,
    text: String,
}

impl RenderedPrompt {
    pub fn template(&self) -> TemplateId {
        self.template
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Hex SHA-256 of the rendered text.
    pub fn digest(&self) -> String {
        prompt_digest(&self.text)
    }
}

pub fn prompt_digest(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub type Bindings<'a> = BTreeMap<&'a str, String>;

/// Yields `(start, end, name)` for every `{identifier}` in `body`.
fn placeholders(body: &str) -> impl Iterator<Item = (usize, usize, &str)> {
    let bytes = body.as_bytes();
    let mut pos = 0;
    std::iter::from_fn(move || {
        while let Some(offset) = body[pos..].find('{') {
            let start = pos + offset;
            let name_len = bytes[start + 1..]
                .iter()
                .take_while(|b| b.is_ascii_lowercase() || **b == b'_')
                .count();
            let end = start + 1 + name_len;
            pos = start + 1;
            if name_len > 0 && bytes.get(end) == Some(&b'}') {
                pos = end + 1;
                return Some((start, end + 1, &body[start + 1..end]));
            }
        }
        None
    })
}

impl PromptTemplate {
    /// Placeholder names found in the body, deduplicated.
    pub fn placeholder_names(&self) -> BTreeSet<&'static str> {
        placeholders(self.body).map(|(_, _, name)| name).collect()
    }

    pub fn render(&self, bindings: &Bindings<'_>) -> Result<RenderedPrompt, PromptError> {
        let missing: Vec<String> = self
            .required_placeholders
            .iter()
            .filter(|name| !bindings.contains_key(*name))
            .map(|name| name.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(PromptError::MissingPlaceholders {
                template: self.id,
                missing,
            });
        }
        let mut text = String::with_capacity(self.body.len());
        let mut last = 0;
        for (start, end, name) in placeholders(self.body) {
            text.push_str(&self.body[last..start]);
            match bindings.get(name) {
                Some(value) => text.push_str(value),
                None => text.push_str(&self.body[start..end]),
            }
            last = end;
        }
        text.push_str(&self.body[last..]);
        Ok(RenderedPrompt {
            template: self.id,
            text,
        })
    }

    /// Renders the template followed by its format reminder. Used for the
    /// single re-prompt after an unparseable response.
    pub fn render_retry(&self, bindings: &Bindings<'_>) -> Result<RenderedPrompt, PromptError> {
        let mut prompt = self.render(bindings)?;
        prompt.text.push_str("\n\n---Format Reminder---\n");
        prompt.text.push_str(self.format_reminder);
        Ok(prompt)
    }
}

/// Builds a binding map from `(name, value)` pairs.
pub fn bindings<'a, const N: usize>(pairs: [(&'a str, String); N]) -> Bindings<'a> {
    pairs.into_iter().collect()
}

const GRAPH_EXTRACTION: &str = "\
---Role---
You are a knowledge engineer who turns prose into a precise entity-relation graph.

---Goal---
Identify the key entities and concepts in the text below and the relationships the text states or clearly implies between them. Prefer cause-and-effect relations where the text supports them. Use the entity names as they appear in the text.

---Output Format---
Write one item per line and nothing else:
entity | relation | entity
entity | relation | entity | short description of the relation
entity | short description of the entity
Do not number the lines. If the text contains no entities, reply with an empty message.

---Text---
{text}";

const CAUSAL_DISCOVERY: &str = "\
---Role---
You are a smart assistant that analyses networks of entities and relations to find cause-and-effect structure.

--- Goal ---
Write a structured, professional causality analysis report for the network below. Identify the causal paths it contains, estimate which of them are plausible, and discard links that are merely associative. Keep the report within the token budget.

---Network Data---
{graph_data}

--- Report Format ---
---Causal Paths---
One path per line, using entity names exactly as they appear in the network:
PATH: cause -[relation]-> effect -[relation]-> further effect
WHY: one sentence explaining why this path is causal
---Analysis---
A short narrative tying the paths together.";

const CAUSAL_SUMMARY: &str = "\
---Role---
You are a helpful assistant that condenses causal analyses into grounded context for answering a question.

---Goal---
Generate a response that answers the user query from the causal summary below. First remove anything not causally relevant to the query, then merge the cleaned information into a coherent summary. Cite the causal paths you rely on by their number in square brackets, for example [1]. Do not add facts that are not in the causal summary.

---Causal Summary---
{causal_summary}

---Causal Paths---
{causal_paths}

---Target Response Length and Format---
{response_type}

---User Query---
{query}";

const ANSWER_GENERATION: &str = "\
---Role---
You are a careful assistant answering questions about a document.

---Goal---
Answer the user query using only the context below. If the context does not contain the answer, say so.

---Context---
{context}

---Target Response Length and Format---
{response_type}

---User Query---
{query}";

const QUESTION_GENERATION: &str = "\
---Role---
You are an examiner writing reading-comprehension questions about a document.

---Goal---
Write {n} questions about the document below. Each question must be answerable from the document alone, and its answer must appear verbatim in the text. Favour questions about reasons, mechanisms and consequences.

---Output Format---
A numbered list. Each item is a question line followed by an answer line quoting the text exactly:
1. <question>
   Answer: <exact span copied from the document>

---Document---
{document}";

const FAITHFULNESS_JUDGE: &str = "\
---Role---
You are a strict fact checker.

---Goal---
Rate how factually consistent the answer is with the reference document on a scale from 0 to 100, where 100 means every claim in the answer is supported by the document. Check the answer claim by claim and state for each claim whether the document supports it.

---Reference Document---
{document}

---Answer---
{answer}

---Output Format---
One line per claim with your verdict, then a final line of the form:
Score: <number from 0 to 100>";

const CAUSAL_RELEVANCE_JUDGE: &str = "\
---Role---
You are an analyst judging whether retrieved evidence bears causally on a question.

---Goal---
Decide whether the retrieved statement is causally related to the user query, meaning it describes a cause, effect or mechanism that helps answer it. Statements that are only topically similar do not count.

---User Query---
{query}

---Retrieved Statement---
{context_item}

---Output Format---
Reply with YES or NO on the first line, then one sentence of justification.";

static REGISTRY: [PromptTemplate; 7] = [
    PromptTemplate {
        id: TemplateId::GraphExtraction,
        body: GRAPH_EXTRACTION,
        required_placeholders: &["text"],
        format_reminder: "Reply only with lines of the form `entity | relation | entity`.",
    },
    PromptTemplate {
        id: TemplateId::CausalDiscovery,
        body: CAUSAL_DISCOVERY,
        required_placeholders: &["graph_data"],
        format_reminder: "Start the reply with the line ---Causal Paths--- and write each path as `PATH: a -[relation]-> b`.",
    },
    PromptTemplate {
        id: TemplateId::CausalSummary,
        body: CAUSAL_SUMMARY,
        required_placeholders: &["causal_summary", "causal_paths", "response_type", "query"],
        format_reminder: "Write the summary as plain prose and cite paths as [n].",
    },
    PromptTemplate {
        id: TemplateId::AnswerGeneration,
        body: ANSWER_GENERATION,
        required_placeholders: &["context", "response_type", "query"],
        format_reminder: "Write the answer as plain prose.",
    },
    PromptTemplate {
        id: TemplateId::QuestionGeneration,
        body: QUESTION_GENERATION,
        required_placeholders: &["n", "document"],
        format_reminder: "Every answer line must start with `Answer:` and quote the document exactly.",
    },
    PromptTemplate {
        id: TemplateId::FaithfulnessJudge,
        body: FAITHFULNESS_JUDGE,
        required_placeholders: &["document", "answer"],
        format_reminder: "End the reply with a line `Score: <number from 0 to 100>`.",
    },
    PromptTemplate {
        id: TemplateId::CausalRelevanceJudge,
        body: CAUSAL_RELEVANCE_JUDGE,
        required_placeholders: &["query", "context_item"],
        format_reminder: "The first line must be exactly YES or NO.",
    },
];
