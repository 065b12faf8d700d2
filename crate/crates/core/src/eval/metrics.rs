//! Context recall and context precision over judged retrieval items.
//!
//! recall    = |{ references matched by some item }| / |R|
//! precision = #(matched items judged causal) / #(matched items)
//!
//! Recall counts each reference at most once; precision is taken over the
//! retrieved items themselves, so duplicates count on both sides.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalError;

/// An exact count ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub numerator: usize,
    pub denominator: usize,
}

impl Ratio {
    pub fn value(self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievedContextItem {
    pub text: String,
    /// Segments this item was derived from.
    #[serde(default)]
    pub sources: Vec<String>,
    pub matched_reference: Option<String>,
    pub judged_causal: Option<bool>,
}

impl RetrievedContextItem {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            sources: Vec::new(),
            matched_reference: None,
            judged_causal: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Recall {
    pub ratio: Ratio,
    /// Items whose reference was already matched by an earlier item.
    pub duplicate_matches: usize,
}

pub fn context_recall(items: &[RetrievedContextItem], reference_set: &[String]) -> Result<Recall, EvalError> {
    if reference_set.is_empty() {
        return Err(EvalError::EmptyReferenceSet);
    }
    let mut matched = BTreeSet::new();
    let mut duplicate_matches = 0;
    for reference in items.iter().filter_map(|i| i.matched_reference.as_ref()) {
        if !reference_set.contains(reference) {
            return Err(EvalError::UnknownReference(reference.clone()));
        }
        if !matched.insert(reference) {
            duplicate_matches += 1;
        }
    }
    if duplicate_matches > 0 {
        tracing::warn!(duplicate_matches, "references matched more than once count once toward recall");
    }
    Ok(Recall {
        ratio: Ratio {
            numerator: matched.len(),
            denominator: reference_set.len(),
        },
        duplicate_matches,
    })
}

/// `None` when no item matched a reference.
pub fn context_precision(items: &[RetrievedContextItem]) -> Result<Option<Ratio>, EvalError> {
    let mut numerator = 0;
    let mut denominator = 0;
    for item in items.iter().filter(|i| i.matched_reference.is_some()) {
        denominator += 1;
        match item.judged_causal {
            Some(true) => numerator += 1,
            Some(false) => {}
            None => return Err(EvalError::UnjudgedItem(item.text.clone())),
        }
    }
    Ok((denominator > 0).then_some(Ratio { numerator, denominator }))
}

/// Mean of the defined components, with faithfulness rescaled to [0, 1].
pub fn composite(recall: Option<f64>, precision: Option<f64>, faithfulness: Option<f64>) -> Option<f64> {
    let parts: Vec<f64> = [recall, precision, faithfulness.map(|f| f / 100.0)]
        .into_iter()
        .flatten()
        .collect();
    (!parts.is_empty()).then(|| parts.iter().sum::<f64>() / parts.len() as f64)
}
