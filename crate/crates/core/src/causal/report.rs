//! Parsing of causal discovery reports and summary citations.
//!
//! Reports follow the discovery template's format section:
//!
//! ```text
//! ---Causal Paths---
//! PATH: Influence Tactics -[raise]-> Buyer Attention -> Contract Award
//! WHY: vivid framing draws buyers toward the bidder
//! ---Analysis---
//! free narrative
//! ```

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;

pub const PATHS_HEADER: &str = "---Causal Paths---";

static ARROW: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"-\[([^\]]*)\]->|->|→").unwrap());
static PATH_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^(?:[-*]\s*)?path\s*\d*\s*[:.)]\s*").unwrap());
static WHY_PREFIX: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)^(?:why|rationale)\s*:\s*").unwrap());
static CITATION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\[\s*(\d+(?:\s*,\s*\d+)*)\s*\]").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPath {
    pub labels: Vec<String>,
    /// `None` where the hop was written as a bare arrow.
    pub relations: Vec<Option<String>>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawReport {
    pub paths: Vec<RawPath>,
    pub narrative: String,
}

fn parse_path(body: &str) -> RawPath {
    let mut labels = Vec::new();
    let mut relations = Vec::new();
    let mut last = 0;
    for cap in ARROW.captures_iter(body) {
        let m = cap.get(0).expect("whole match");
        labels.push(body[last..m.start()].trim().to_string());
        relations.push(
            cap.get(1)
                .map(|r| r.as_str().trim().to_string())
                .filter(|r| !r.is_empty()),
        );
        last = m.end();
    }
    labels.push(body[last..].trim().to_string());
    RawPath {
        labels,
        relations,
        rationale: String::new(),
    }
}

/// Returns `None` when the reply has neither the paths header nor any
/// `PATH:` line.
pub fn parse_report(response: &str) -> Option<RawReport> {
    let mut saw_header = false;
    let mut paths: Vec<RawPath> = Vec::new();
    for line in response.lines() {
        let line = line.trim();
        if line.eq_ignore_ascii_case(PATHS_HEADER) {
            saw_header = true;
        } else if let Some(m) = PATH_PREFIX.find(line) {
            paths.push(parse_path(&line[m.end()..]));
        } else if let Some(m) = WHY_PREFIX.find(line) {
            if let Some(path) = paths.last_mut() {
                path.rationale = line[m.end()..].trim().to_string();
            }
        }
    }
    (saw_header || !paths.is_empty()).then(|| RawReport {
        paths,
        narrative: response.trim().to_string(),
    })
}

/// Distinct cited path numbers in `1..=path_count`, ascending.
pub fn parse_citations(text: &str, path_count: usize) -> Vec<usize> {
    let cited: BTreeSet<usize> = CITATION
        .captures_iter(text)
        .flat_map(|cap| {
            cap[1]
                .split(',')
                .filter_map(|n| n.trim().parse::<usize>().ok())
                .collect::<Vec<_>>()
        })
        .filter(|n| (1..=path_count).contains(n))
        .collect();
    cited.into_iter().collect()
}
