//! Reference matching, causal-relevance verdicts and faithfulness scoring.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{EvalError, EvalSample, RetrievedContextItem};
use crate::gateway::{bindings, Gateway, GatewayError, TemplateId};
use crate::retriever::ContextStatement;
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JudgeMode {
    /// Causal flags come from the dataset's annotations.
    Annotated,
    /// Causal flags come from the causal relevance judge prompt.
    Judge,
}

/// Normalized containment in either direction.
pub fn matches_reference(item: &str, reference: &str) -> bool {
    let (item, reference) = (text::normalize(item), text::normalize(reference));
    !item.is_empty() && !reference.is_empty() && (item.contains(&reference) || reference.contains(&item))
}

/// First reference, in reference-set order, that `item` matches.
pub fn match_reference<'a>(item: &str, reference_set: &'a [String]) -> Option<&'a String> {
    reference_set.iter().find(|r| matches_reference(item, r))
}

/// Reads a YES/NO verdict from the first word that is one.
pub fn parse_verdict(reply: &str) -> Option<bool> {
    text::words(reply).find_map(|w| match w.as_str() {
        "yes" | "true" => Some(true),
        "no" | "false" => Some(false),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct JudgedItems {
    pub items: Vec<RetrievedContextItem>,
    /// Items whose verdict stayed unparseable after the re-prompt.
    pub undefined_verdicts: usize,
}

/// Matches each retrieved statement against the reference set and resolves
/// its causal flag.
///
/// Annotated mode takes the flag of the matched reference from the sample's
/// annotations; references without an annotation count as causal. Judge mode
/// asks the model about every item.
pub fn judge_matches_and_causality(
    statements: &[ContextStatement],
    sample: &EvalSample,
    mode: JudgeMode,
    gateway: &Gateway,
) -> Result<JudgedItems, EvalError> {
    if mode == JudgeMode::Annotated && sample.annotations.is_none() {
        return Err(EvalError::MissingAnnotations {
            question: sample.question.clone(),
        });
    }
    let mut judged = JudgedItems::default();
    for statement in statements {
        let matched = match_reference(&statement.text, &sample.reference_set).cloned();
        let judged_causal = match mode {
            JudgeMode::Annotated => matched.as_ref().map(|r| {
                sample
                    .annotations
                    .as_ref()
                    .and_then(|a| a.get(r).copied())
                    .unwrap_or(true)
            }),
            JudgeMode::Judge => {
                let verdict = gateway.complete_parsed(
                    TemplateId::CausalRelevanceJudge,
                    &bindings([
                        ("query", sample.question.clone()),
                        ("context_item", statement.text.clone()),
                    ]),
                    parse_verdict,
                )?;
                if verdict.is_none() {
                    judged.undefined_verdicts += 1;
                }
                verdict
            }
        };
        judged.items.push(RetrievedContextItem {
            text: statement.text.clone(),
            sources: statement.sources.clone(),
            matched_reference: matched,
            judged_causal,
        });
    }
    Ok(judged)
}

static SCORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)score\s*[:=]?\s*(-?\d+(?:\.\d+)?)").unwrap());

/// Reads a `Score: N` line (last one wins) or a bare number, clamped to
/// [0, 100].
pub fn parse_score(reply: &str) -> Option<f64> {
    let score = SCORE
        .captures_iter(reply)
        .last()
        .and_then(|c| c[1].parse::<f64>().ok())
        .or_else(|| reply.trim().trim_end_matches('%').parse::<f64>().ok())?;
    score.is_finite().then(|| score.clamp(0.0, 100.0))
}

/// 0–100 factual consistency of `answer` with the reference document;
/// `None` when the judge reply cannot be read even after a re-prompt.
pub fn faithfulness(answer: &str, reference_document: &str, gateway: &Gateway) -> Result<Option<f64>, GatewayError> {
    if answer.trim().is_empty() || reference_document.trim().is_empty() {
        return Ok(None);
    }
    gateway.complete_parsed(
        TemplateId::FaithfulnessJudge,
        &bindings([
            ("document", reference_document.to_string()),
            ("answer", answer.to_string()),
        ]),
        parse_score,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::MockScript;
    use std::collections::BTreeMap;

    fn sample() -> EvalSample {
        EvalSample {
            document_id: "d".into(),
            question: "Why were contracts awarded?".into(),
            reference_set: vec!["Influence tactics raise buyer attention".into(), "Prices fell".into()],
            annotations: Some(BTreeMap::from([("Prices fell".to_string(), false)])),
        }
    }

    fn stmt(text: &str) -> ContextStatement {
        ContextStatement {
            text: text.into(),
            sources: vec!["d/s0000".into()],
        }
    }

    #[test]
    fn matching_rules() {
        assert!(matches_reference("INFLUENCE   tactics raise buyer attention \u{2014} detail", "influence tactics raise buyer attention"));
        assert!(matches_reference("prices", "Prices fell"));
        assert!(!matches_reference("", "x"));
        assert!(!matches_reference("weather", "Prices fell"));
    }

    #[test]
    fn annotated_mode() {
        let gw = Gateway::mock(MockScript::new(), 8);
        let judged = judge_matches_and_causality(
            &[stmt("Influence tactics raise buyer attention"), stmt("prices fell sharply? no: Prices fell"), stmt("other")],
            &sample(),
            JudgeMode::Annotated,
            &gw,
        )
        .unwrap();
        let flags: Vec<_> = judged.items.iter().map(|i| (i.matched_reference.is_some(), i.judged_causal)).collect();
        assert_eq!(flags, [(true, Some(true)), (true, Some(false)), (false, None)]);
        assert_eq!(gw.stats().completions, 0);
    }

    #[test]
    fn annotated_mode_requires_annotations() {
        let gw = Gateway::mock(MockScript::new(), 8);
        let s = EvalSample { annotations: None, ..sample() };
        assert!(matches!(
            judge_matches_and_causality(&[], &s, JudgeMode::Annotated, &gw),
            Err(EvalError::MissingAnnotations { .. })
        ));
    }

    #[test]
    fn judge_mode_follows_script() {
        let script = MockScript::new()
            .on_contains(TemplateId::CausalRelevanceJudge, "alpha", "YES, it explains the cause.")
            .on_contains(TemplateId::CausalRelevanceJudge, "beta", "no")
            .on_template(TemplateId::CausalRelevanceJudge, "maybe?");
        let gw = Gateway::mock(script, 8);
        let judged =
            judge_matches_and_causality(&[stmt("alpha"), stmt("beta"), stmt("gamma")], &sample(), JudgeMode::Judge, &gw).unwrap();
        let flags: Vec<_> = judged.items.iter().map(|i| i.judged_causal).collect();
        assert_eq!(flags, [Some(true), Some(false), None]);
        assert_eq!(judged.undefined_verdicts, 1);
    }

    #[test]
    fn score_parsing() {
        assert_eq!(parse_score("score: 78"), Some(78.0));
        assert_eq!(parse_score("claim 1 ok\nScore: 100"), Some(100.0));
        assert_eq!(parse_score("100"), Some(100.0));
        assert_eq!(parse_score("Score: 140"), Some(100.0));
        assert_eq!(parse_score("Score: -3"), Some(0.0));
        assert_eq!(parse_score("I liked it"), None);
    }

    #[test]
    fn faithfulness_paths() {
        let gw = Gateway::mock(MockScript::new().with_fallback("score: 78"), 8);
        assert_eq!(faithfulness("a", "doc", &gw).unwrap(), Some(78.0));
        let gw = Gateway::mock(MockScript::new().with_fallback("Score: 100"), 8);
        assert_eq!(faithfulness("same text", "same text", &gw).unwrap(), Some(100.0));
        let gw = Gateway::mock(MockScript::new().with_fallback("garbage"), 8);
        assert_eq!(faithfulness("a", "doc", &gw).unwrap(), None);
        assert_eq!(gw.stats().completions, 2);
    }
}
