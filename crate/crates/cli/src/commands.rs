use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use causalrag_core::causal::{self, Answer};
use causalrag_core::eval::{
    generate_questions, load_dataset, run_eval, sweep, Corpus, EvalOptions, EvalSample, JudgeMode, MetricsReport,
    SweepGrid, System,
};
use causalrag_core::gateway::Gateway;
use causalrag_core::indexer::{build_index_to, load_index, Document};
use causalrag_core::retriever::RetrievalParams;
use serde::Serialize;

use crate::config::AppConfig;
use crate::error::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut body = serde_json::to_string_pretty(value).map_err(CliError::input)?;
    body.push('\n');
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::input(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, body).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn document_from_file(path: &Path, domain: &str) -> Result<Document, CliError> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::input(format!("{}: not a usable file name", path.display())))?;
    let text = read_text(path)?;
    Document::new(stem, stem, text, domain).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Text files under `input`, sorted, or `input` itself when it is a file.
fn input_files(input: &Path) -> Result<Vec<PathBuf>, CliError> {
    let meta = fs::metadata(input).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    if meta.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let entries = fs::read_dir(input).map_err(|e| CliError::input(format!("{}: {e}", input.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "txt" || x == "md"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::input(format!("no documents in {}", input.display())));
    }
    Ok(files)
}

pub fn index(config: &AppConfig, gw: &Gateway, input: &Path, out: &Path, domain: &str) -> Result<String, CliError> {
    let docs = input_files(input)?
        .iter()
        .map(|p| document_from_file(p, domain))
        .collect::<Result<Vec<_>, _>>()?;
    let mut stdout = String::new();
    for doc in &docs {
        let (index, report) = build_index_to(doc, &config.index, gw, &out.join(&doc.id))?;
        for warning in &report.warnings {
            tracing::warn!(document = %doc.id, "{warning}");
        }
        writeln!(
            stdout,
            "{}: {} segments, {} nodes, {} edges, {} malformed lines",
            doc.id,
            index.segments.len(),
            index.graph.node_count(),
            index.graph.edge_count(),
            report.malformed_lines
        )
        .unwrap();
    }
    Ok(stdout)
}

pub fn ask(config: &AppConfig, gw: &Gateway, index_dir: &Path, query: &str, trace: bool, json: bool) -> Result<String, CliError> {
    let index = load_index(index_dir)?;
    let answer = causal::answer(query, &index, config.retrieval, &config.response_type, gw)?;
    if json {
        let mut out = serde_json::to_string_pretty(&answer).map_err(CliError::input)?;
        out.push('\n');
        return Ok(out);
    }
    let mut out = format!("{}\n", answer.text.trim_end());
    if trace {
        out.push_str(&render_trace(&answer));
    }
    Ok(out)
}

fn render_trace(answer: &Answer) -> String {
    let p = &answer.provenance;
    let mut out = String::from("\n--- trace ---\n");
    writeln!(out, "k={} s={}", p.params.k, p.params.s).unwrap();
    out.push_str("seeds:\n");
    for seed in &p.seeds {
        writeln!(out, "  {} ({:.4})", seed.id, seed.score).unwrap();
    }
    out.push_str("frontier:\n");
    for (node, hops) in &p.frontier {
        writeln!(out, "  {node} {hops}").unwrap();
    }
    out.push_str("paths:\n");
    for (i, path) in p.paths.iter().enumerate() {
        let cited = if p.source_paths.contains(&(i + 1)) { " *" } else { "" };
        writeln!(out, "  [{}] {path}{cited}", i + 1).unwrap();
    }
    for warning in &p.warnings {
        writeln!(out, "warning: {warning}").unwrap();
    }
    writeln!(out, "prompt_digest: {}", p.prompt_digest).unwrap();
    out
}

pub fn gen_questions(gw: &Gateway, doc_path: &Path, n: usize, out: Option<&Path>) -> Result<String, CliError> {
    let doc = document_from_file(doc_path, "general")?;
    let set = generate_questions(&doc, n, gw)?;
    for warning in &set.warnings {
        tracing::warn!("{warning}");
    }
    let mut stdout = String::new();
    for (i, q) in set.questions.iter().enumerate() {
        writeln!(stdout, "{}. {}", i + 1, q.question).unwrap();
    }
    if let Some(path) = out {
        let mut lines = String::new();
        for q in &set.questions {
            let sample = EvalSample {
                document_id: doc.id.clone(),
                question: q.question.clone(),
                reference_set: vec![q.answer.clone()],
                annotations: None,
            };
            lines.push_str(&serde_json::to_string(&sample).map_err(CliError::input)?);
            lines.push('\n');
        }
        fs::write(path, lines).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    Ok(stdout)
}

pub struct EvalArgs<'a> {
    pub index_root: &'a Path,
    pub dataset: &'a Path,
    pub system: System,
    pub mode: JudgeMode,
    pub report_out: Option<&'a Path>,
}

fn load_inputs(args: &EvalArgs) -> Result<(Corpus, Vec<EvalSample>), CliError> {
    let dataset = load_dataset(args.dataset)?;
    let corpus = Corpus::load_for(args.index_root, &dataset)?;
    Ok((corpus, dataset))
}

fn metric(value: Option<f64>) -> String {
    value.map_or_else(|| "undefined".to_string(), |v| format!("{v:.4}"))
}

pub fn render_report(report: &MetricsReport) -> String {
    let rows = [
        ("system", format!("{:?}", report.system).to_lowercase()),
        ("mode", format!("{:?}", report.mode).to_lowercase()),
        ("k", report.params.k.to_string()),
        ("s", report.params.s.to_string()),
        ("samples", report.samples.to_string()),
        ("failures", report.failures.to_string()),
        ("context_recall", metric(report.context_recall)),
        ("context_precision", metric(report.context_precision)),
        ("faithfulness", metric(report.faithfulness)),
        ("n_retrieved", report.n_retrieved.to_string()),
        ("undefined_precision", report.undefined_precision.to_string()),
        ("undefined_faithfulness", report.undefined_faithfulness.to_string()),
        ("undefined_verdicts", report.undefined_verdicts.to_string()),
        ("composite", metric(report.mean_composite())),
    ];
    let mut out = String::new();
    for (name, value) in rows {
        writeln!(out, "{name:<24}{value}").unwrap();
    }
    for row in report.per_sample.iter().filter(|r| !r.is_ok()) {
        writeln!(out, "failed: {} / {}: {}", row.document_id, row.question, row.error.as_deref().unwrap_or("")).unwrap();
    }
    out
}

/// Fails with the provider exit code when every sample failed on the provider.
fn provider_outage(failures: usize, provider: usize, samples: usize, first: Option<&str>) -> Result<(), CliError> {
    if samples > 0 && failures == samples && provider == samples {
        return Err(CliError::provider(format!("all samples failed: {}", first.unwrap_or("provider error"))));
    }
    Ok(())
}

pub fn eval(config: &AppConfig, gw: &Gateway, args: &EvalArgs) -> Result<String, CliError> {
    let (corpus, dataset) = load_inputs(args)?;
    let options = EvalOptions {
        system: args.system,
        mode: args.mode,
        params: config.retrieval,
        response_type: config.response_type.clone(),
    };
    let report = run_eval(&corpus, &dataset, &options, gw);
    if let Some(path) = args.report_out {
        write_json(path, &report)?;
    }
    let first = report.per_sample.iter().find_map(|r| r.error.as_deref());
    provider_outage(report.failures, report.provider_failures(), report.samples, first)?;
    Ok(render_report(&report))
}

pub fn render_grid(grid: &SweepGrid) -> String {
    let mut out = String::from("k\\s");
    for s in &grid.s_values {
        write!(out, "{s:>10}").unwrap();
    }
    out.push('\n');
    for &k in &grid.k_values {
        write!(out, "{k:<3}").unwrap();
        for &s in &grid.s_values {
            let cell = grid.cell(k, s).and_then(|c| c.composite);
            write!(out, "{:>10}", metric(cell)).unwrap();
        }
        out.push('\n');
    }
    for cell in grid.cells.iter().filter(|c| c.error.is_some()) {
        writeln!(out, "k={} s={}: {}", cell.k, cell.s, cell.error.as_deref().unwrap_or("")).unwrap();
    }
    out
}

pub fn sweep_grid(config: &AppConfig, gw: &Gateway, args: &EvalArgs, ks: &[usize], ss: &[usize]) -> Result<String, CliError> {
    let (corpus, dataset) = load_inputs(args)?;
    let options = EvalOptions {
        system: args.system,
        mode: args.mode,
        params: RetrievalParams::default(),
        response_type: config.response_type.clone(),
    };
    let grid = sweep(&corpus, &dataset, ks, ss, &options, gw)?;
    if let Some(path) = args.report_out {
        write_json(path, &grid)?;
    }
    Ok(render_grid(&grid))
}
