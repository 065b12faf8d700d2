//! LLM graph extraction over document segments.
//!
//! The extraction template asks for one item per line:
//!
//! ```text
//! entity | relation | entity
//! entity | relation | entity | relation description
//! entity | entity description
//! ```

use rayon::prelude::*;

use super::{IndexerError, Segment};
use crate::gateway::{bindings, Gateway, TemplateId};
use crate::graph::{KnowledgeGraph, NodeId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtractedItem {
    Entity {
        name: String,
        description: String,
    },
    Relation {
        source: String,
        relation: String,
        target: String,
        description: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedExtraction {
    pub items: Vec<ExtractedItem>,
    pub malformed: usize,
}

fn strip_list_marker(line: &str) -> &str {
    let line = line.trim();
    if let Some(rest) = line.strip_prefix("- ").or_else(|| line.strip_prefix("* ")) {
        return rest.trim_start();
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(rest) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return rest.trim_start();
        }
    }
    line
}

fn clean_field(field: &str) -> &str {
    field.trim().trim_matches(|c| c == '"' || c == '\'' || c == '`').trim()
}

/// Parses one extraction response. Lines that are not a well-formed entity
/// or relation item are counted as malformed and skipped.
pub fn parse_extraction(response: &str) -> ParsedExtraction {
    let mut parsed = ParsedExtraction::default();
    for line in response.lines() {
        let line = strip_list_marker(line);
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').map(clean_field).collect();
        let item = match fields.as_slice() {
            [name, description] if !name.is_empty() && !description.is_empty() => Some(ExtractedItem::Entity {
                name: name.to_string(),
                description: description.to_string(),
            }),
            [source, relation, target, rest @ ..] if rest.len() <= 1 => {
                let distinct = match (NodeId::from_label(source), NodeId::from_label(target)) {
                    (Some(a), Some(b)) => a != b,
                    _ => false,
                };
                (distinct && !relation.is_empty()).then(|| ExtractedItem::Relation {
                    source: source.to_string(),
                    relation: relation.to_string(),
                    target: target.to_string(),
                    description: rest.first().map(|d| d.to_string()).unwrap_or_default(),
                })
            }
            _ => None,
        };
        match item {
            Some(item) => parsed.items.push(item),
            None => parsed.malformed += 1,
        }
    }
    parsed
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub graph: KnowledgeGraph,
    pub malformed_lines: usize,
    /// One entry per segment that contributed nothing.
    pub warnings: Vec<String>,
}

enum SegmentOutcome {
    Items(Vec<ExtractedItem>, usize),
    Empty,
    Unparseable(usize),
}

/// Extracts and merges a graph from every segment. Segments are processed
/// concurrently; merging happens in segment order so the result does not
/// depend on scheduling.
pub fn extract_graph(segments: &[Segment], gateway: &Gateway) -> Result<Extraction, IndexerError> {
    if segments.is_empty() {
        return Err(IndexerError::NoSegments);
    }
    let template = TemplateId::GraphExtraction.template();
    let outcomes = segments
        .par_iter()
        .map(|seg| {
            let prompt = template.render(&bindings([("text", seg.text.clone())]))?;
            let response = gateway.complete(&prompt)?;
            if response.trim().is_empty() {
                return Ok(SegmentOutcome::Empty);
            }
            let parsed = parse_extraction(&response);
            Ok(if parsed.items.is_empty() {
                SegmentOutcome::Unparseable(parsed.malformed)
            } else {
                SegmentOutcome::Items(parsed.items, parsed.malformed)
            })
        })
        .collect::<Result<Vec<_>, IndexerError>>()?;

    if outcomes.iter().all(|o| matches!(o, SegmentOutcome::Unparseable(_))) {
        return Err(IndexerError::ExtractionFailed {
            segments: segments.len(),
        });
    }

    let mut extraction = Extraction::default();
    for (seg, outcome) in segments.iter().zip(outcomes) {
        let segment = Some(seg.id.as_str());
        match outcome {
            SegmentOutcome::Empty => extraction.warnings.push(format!("{}: empty extraction response", seg.id)),
            SegmentOutcome::Unparseable(malformed) => {
                extraction.malformed_lines += malformed;
                extraction
                    .warnings
                    .push(format!("{}: unparseable extraction response", seg.id));
            }
            SegmentOutcome::Items(items, malformed) => {
                extraction.malformed_lines += malformed;
                let graph = &mut extraction.graph;
                for item in items {
                    match item {
                        ExtractedItem::Entity { name, description } => {
                            graph.upsert_node(&name, &description, segment)?;
                        }
                        ExtractedItem::Relation {
                            source,
                            relation,
                            target,
                            description,
                        } => {
                            let s = graph.upsert_node(&source, "", segment)?;
                            let t = graph.upsert_node(&target, "", segment)?;
                            graph.add_edge(&s, &t, &relation, &description, segment)?;
                        }
                    }
                }
            }
        }
    }
    Ok(extraction)
}
