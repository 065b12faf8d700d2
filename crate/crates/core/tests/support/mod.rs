//! Fixture builders shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use causalrag_core::eval::{Corpus, EvalSample};
use causalrag_core::gateway::{Gateway, MockScript, TemplateId};
use causalrag_core::graph::KnowledgeGraph;
use causalrag_core::indexer::{build_index, Document, DocumentIndex, IndexConfig, SegmentParams};
use rand::seq::IndexedRandom;
use rand::Rng;

pub const DIM: usize = 64;

const WORDS: &[&str] = &[
    "price", "demand", "supply", "buyer", "seller", "contract", "risk", "delay", "policy", "growth", "trust", "signal",
    "cost", "margin", "shock", "attention", "award", "vendor", "market", "rate",
];

pub fn random_words(rng: &mut impl Rng, n: usize) -> String {
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// Graph with `n` labelled nodes and up to `m` random directed edges.
pub fn random_graph(rng: &mut impl Rng, n: usize, m: usize) -> KnowledgeGraph {
    let mut g = KnowledgeGraph::new();
    let ids: Vec<_> = (0..n)
        .map(|i| {
            let desc = random_words(rng, 3);
            g.upsert_node(&format!("Node {i}"), &desc, None).unwrap()
        })
        .collect();
    if n >= 2 {
        for _ in 0..m {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b {
                let rel = format!("rel{}", rng.random_range(0..3));
                let desc = random_words(rng, 2);
                g.add_edge(&ids[a], &ids[b], &rel, &desc, None).unwrap();
            }
        }
    }
    g
}

/// An extraction reply that reproduces `graph`.
pub fn extraction_reply(graph: &KnowledgeGraph) -> String {
    let mut lines: Vec<String> = graph
        .nodes()
        .filter(|n| !n.description.is_empty())
        .map(|n| format!("{} | {}", n.label, n.description))
        .collect();
    for e in graph.edges() {
        let src = &graph.node(&e.source).unwrap().label;
        let tgt = &graph.node(&e.target).unwrap().label;
        lines.push(format!("{src} | {} | {tgt} | {}", e.relation, e.description));
    }
    lines.join("\n")
}

/// Indexes a one-segment document whose extraction yields `graph`.
pub fn index_from_graph(doc_id: &str, graph: &KnowledgeGraph) -> DocumentIndex {
    let doc = Document::new(doc_id, doc_id, format!("Synthetic document {doc_id}."), "test").unwrap();
    let gw = Gateway::mock(MockScript::new().on_template(TemplateId::GraphExtraction, extraction_reply(graph)), DIM);
    build_index(&doc, &IndexConfig::default(), &gw).unwrap().0
}

pub struct Fixture {
    pub corpus: Corpus,
    pub dataset: Vec<EvalSample>,
    pub script: MockScript,
}

impl Fixture {
    pub fn gateway(&self) -> Gateway {
        Gateway::mock(self.script.clone(), DIM)
    }
}

fn paragraph_config() -> IndexConfig {
    IndexConfig {
        segment: SegmentParams {
            max_chars: 125,
            overlap_chars: 0,
        },
        ..IndexConfig::default()
    }
}

pub const DISTRACTOR_QUERY: &str = "Why did the firm win the contract award?";

/// One causal paragraph and two distractor paragraphs that share most of
/// their words with the query. The distractor references are annotated as
/// not causal.
pub fn distractor_fixture() -> Fixture {
    let text = "Influence tactics raise buyer attention among procurement officers. Buyer attention drives contract award decisions.\n\
Why did the firm win the contract award? Reporters asked why, and the contract award ceremony was held in spring.\n\
Did the firm win the contract award? The contract award was announced on the firm website, the firm said.";
    let doc = Document::new("pitch", "Winning the pitch", text, "marketing").unwrap();

    let index_script = MockScript::new()
        .on_contains(
            TemplateId::GraphExtraction,
            "Influence tactics raise",
            "Influence Tactics | raise | Buyer Attention | procurement officers notice persistent vendors\n\
             Buyer Attention | drives | Contract Award | attention turns into selection",
        )
        .on_contains(TemplateId::GraphExtraction, "ceremony", "Award Ceremony | held in | Spring")
        .on_contains(TemplateId::GraphExtraction, "website", "Contract Award | announced on | Firm Website");
    let gw = Gateway::mock(index_script.clone(), DIM);
    let (index, _) = build_index(&doc, &paragraph_config(), &gw).unwrap();
    assert_eq!(index.segments.len(), 3, "fixture expects one segment per paragraph");

    let script = index_script
        .on_template(
            TemplateId::CausalDiscovery,
            "---Causal Paths---\n\
             PATH: Influence Tactics -[raise]-> Buyer Attention -[drives]-> Contract Award\n\
             WHY: persistent outreach earns attention, which turns into the award.\n\
             ---Analysis---\n\
             The award follows from attention created by influence tactics.",
        )
        .on_template(
            TemplateId::CausalSummary,
            "Influence tactics raised buyer attention, which drove the contract award [1].",
        )
        .on_template(
            TemplateId::AnswerGeneration,
            "The firm won because its influence tactics raised buyer attention.",
        )
        .on_template(TemplateId::FaithfulnessJudge, "Score: 90");

    let sample = EvalSample {
        document_id: "pitch".into(),
        question: DISTRACTOR_QUERY.into(),
        reference_set: vec![
            "Influence tactics raise buyer attention".into(),
            "Buyer attention drives contract award".into(),
            "the contract award ceremony was held in spring".into(),
            "The contract award was announced on the firm website".into(),
        ],
        annotations: Some(BTreeMap::from([
            ("the contract award ceremony was held in spring".to_string(), false),
            ("The contract award was announced on the firm website".to_string(), false),
        ])),
    };
    Fixture {
        corpus: Corpus::from_iter([index]),
        dataset: vec![sample],
        script,
    }
}

pub const CHAIN: &[&str] = &["Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel"];

/// A causal chain `Alpha -> Bravo -> ... -> Hotel`. Every hop is a causal
/// reference and discovery reports every hop, so larger retrieval can only
/// recover more references.
pub fn monotone_fixture() -> Fixture {
    let statements: Vec<String> = CHAIN.windows(2).map(|w| format!("{} triggers {}", w[0], w[1])).collect();
    let text = statements.iter().map(|s| format!("{s}.")).collect::<Vec<_>>().join(" ");
    let doc = Document::new("chain", "Chain", &text, "test").unwrap();
    let extraction = CHAIN
        .iter()
        .map(|n| format!("{n} | stage {} of the chain", n.to_lowercase()))
        .chain(CHAIN.windows(2).map(|w| format!("{} | triggers | {}", w[0], w[1])))
        .collect::<Vec<_>>()
        .join("\n");
    let discovery = std::iter::once("---Causal Paths---".to_string())
        .chain(CHAIN.windows(2).map(|w| format!("PATH: {} -[triggers]-> {}", w[0], w[1])))
        .collect::<Vec<_>>()
        .join("\n");
    let script = MockScript::new()
        .on_template(TemplateId::GraphExtraction, extraction)
        .on_template(TemplateId::CausalDiscovery, discovery)
        .on_template(TemplateId::CausalSummary, "Each stage triggers the next [1].")
        .on_template(TemplateId::AnswerGeneration, "The chain runs from alpha to hotel.")
        .on_template(TemplateId::FaithfulnessJudge, "Score: 80")
        .on_template(TemplateId::CausalRelevanceJudge, "YES");
    let gw = Gateway::mock(script.clone(), DIM);
    let (index, _) = build_index(&doc, &IndexConfig::default(), &gw).unwrap();

    let dataset = ["What does alpha set off?", "What leads up to hotel?"]
        .into_iter()
        .map(|q| EvalSample {
            document_id: "chain".into(),
            question: q.into(),
            reference_set: statements.clone(),
            annotations: Some(BTreeMap::new()),
        })
        .collect();
    Fixture {
        corpus: Corpus::from_iter([index]),
        dataset,
        script,
    }
}

/// All-pairs shortest paths over the undirected edge list, then a filter.
pub fn expansion_oracle(
    graph: &KnowledgeGraph,
    seeds: &[causalrag_core::graph::NodeId],
    hops: usize,
) -> BTreeMap<causalrag_core::graph::NodeId, usize> {
    let ids: Vec<_> = graph.node_ids().cloned().collect();
    let pos = |id: &causalrag_core::graph::NodeId| ids.iter().position(|x| x == id).unwrap();
    let n = ids.len();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for e in graph.edges() {
        let (a, b) = (pos(&e.source), pos(&e.target));
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for (j, id) in ids.iter().enumerate() {
        let best = seeds.iter().map(|s| d[pos(s)][j]).min().unwrap_or(inf);
        if best <= hops {
            out.insert(id.clone(), best);
        }
    }
    out
}

/// Sorts every candidate by (score desc, key asc) and keeps the first `k`.
pub fn top_k_oracle(
    index: &causalrag_core::vector::VectorIndex,
    query: &causalrag_core::vector::Embedding,
    k: usize,
    kind: causalrag_core::vector::EntryKind,
) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = index
        .entries()
        .iter()
        .filter(|e| e.kind == kind)
        .map(|e| {
            let (a, b) = (e.vector.values(), query.values());
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
            (e.key.clone(), (dot / (na * nb)).clamp(-1.0, 1.0))
        })
        .collect();
    all.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(&y.0)));
    all.truncate(k);
    all
}

/// A randomized metric case: references, retrieved texts and annotations.
#[derive(Debug, Clone)]
pub struct MetricCase {
    pub sample: EvalSample,
    pub texts: Vec<String>,
}

pub fn random_metric_case(rng: &mut impl Rng) -> MetricCase {
    let n_refs = rng.random_range(1..=10);
    let reference_set: Vec<String> = (0..n_refs).map(|i| format!("reference {i} marker{i}x")).collect();
    let mut annotations = BTreeMap::new();
    for r in &reference_set {
        match rng.random_range(0..3) {
            0 => {}
            1 => {
                annotations.insert(r.clone(), true);
            }
            _ => {
                annotations.insert(r.clone(), false);
            }
        }
    }
    let n_items = rng.random_range(0..=10);
    let texts = (0..n_items)
        .map(|j| {
            let r = &reference_set[rng.random_range(0..n_refs)];
            match rng.random_range(0..4) {
                0 => r.to_uppercase(),
                1 => format!("Context: {}  and more", r.replace(' ', "   ")),
                2 => r.clone(),
                _ => format!("unrelated statement {j}"),
            }
        })
        .collect();
    MetricCase {
        sample: EvalSample {
            document_id: "d".into(),
            question: "q?".into(),
            reference_set,
            annotations: Some(annotations),
        },
        texts,
    }
}

/// Enumerates every (item, reference) pair directly.
/// Returns ((recall numerator, |R|), Option<(precision numerator, denominator)>).
pub fn metric_oracle(case: &MetricCase) -> ((usize, usize), Option<(usize, usize)>) {
    let norm = |s: &str| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    let refs = &case.sample.reference_set;
    let hits = |t: &str, r: &str| {
        let (t, r) = (norm(t), norm(r));
        t.contains(&r) || r.contains(&t)
    };
    let recall_num = refs.iter().filter(|r| case.texts.iter().any(|t| hits(t, r))).count();
    let mut matched = 0;
    let mut causal = 0;
    for t in &case.texts {
        if let Some(r) = refs.iter().find(|r| hits(t, r)) {
            matched += 1;
            let flag = case.sample.annotations.as_ref().unwrap().get(r).copied().unwrap_or(true);
            if flag {
                causal += 1;
            }
        }
    }
    ((recall_num, refs.len()), (matched > 0).then_some((causal, matched)))
}
