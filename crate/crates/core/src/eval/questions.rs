//! Grounded question generation: every accepted question carries an answer
//! span that occurs in the source document.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gateway::{bindings, Gateway, TemplateId};
use crate::indexer::Document;
use crate::text;

pub const DEFAULT_QUESTION_COUNT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub question: String,
    /// Span copied from the document.
    pub answer: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct QuestionSet {
    pub questions: Vec<GeneratedQuestion>,
    /// Parsed pairs whose answer span is not in the document.
    pub rejected: usize,
    pub warnings: Vec<String>,
}

static ITEM: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\s*(?:Q\s*)?\d+\s*[.):]\s*(.+)$").unwrap());
static ANSWER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^\s*(?:[-*]\s*)?answer\s*:\s*(.*)$").unwrap());

fn unquote(s: &str) -> &str {
    s.trim()
        .trim_matches(|c| matches!(c, '"' | '\'' | '“' | '”' | '`'))
        .trim()
}

/// Numbered question lines, each followed by an `Answer:` line. Items
/// without an answer are skipped.
pub fn parse_questions(reply: &str) -> Vec<GeneratedQuestion> {
    let mut out = Vec::new();
    let mut pending: Option<String> = None;
    for line in reply.lines() {
        if let Some(c) = ANSWER.captures(line) {
            if let Some(question) = pending.take() {
                let answer = unquote(&c[1]).to_string();
                if !answer.is_empty() {
                    out.push(GeneratedQuestion { question, answer });
                }
            }
        } else if let Some(c) = ITEM.captures(line) {
            let q = text::collapse_whitespace(&c[1]);
            pending = (!q.is_empty()).then_some(q);
        }
    }
    out
}

fn grounded(answer: &str, normalized_doc: &str) -> bool {
    let span = text::normalize(answer);
    !span.is_empty() && normalized_doc.contains(&span)
}

/// Asks for `n` grounded questions, re-requesting once if too few survive
/// the grounding check. A shortfall after the retry is a warning.
pub fn generate_questions(doc: &Document, n: usize, gateway: &Gateway) -> Result<QuestionSet, EvalError> {
    if n == 0 {
        return Err(EvalError::ZeroQuestions);
    }
    let template = TemplateId::QuestionGeneration.template();
    let b = bindings([("n", n.to_string()), ("document", doc.text.clone())]);
    let normalized_doc = text::normalize(&doc.text);
    let mut set = QuestionSet::default();
    let mut seen = BTreeSet::new();

    for attempt in 0..2 {
        if attempt == 1 && set.questions.len() >= n {
            break;
        }
        let prompt = if attempt == 0 { template.render(&b)? } else { template.render_retry(&b)? };
        let reply = gateway.complete(&prompt)?;
        for q in parse_questions(&reply) {
            if !grounded(&q.answer, &normalized_doc) {
                set.rejected += 1;
                continue;
            }
            if seen.insert(text::normalize(&q.question)) {
                set.questions.push(q);
            }
        }
    }
    set.questions.truncate(n);
    if set.questions.len() < n {
        set.warnings.push(format!(
            "only {} of {n} questions are grounded in document {}",
            set.questions.len(),
            doc.id
        ));
    }
    Ok(set)
}
