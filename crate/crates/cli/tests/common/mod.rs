#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const EPOCH: &str = "1700000000";

pub fn toy() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/toy")
}

pub fn golden_path(name: &str) -> PathBuf {
    toy().join("golden").join(name)
}

/// Runs the binary in mock mode against the toy script.
pub fn causalrag(args: &[&str]) -> Output {
    let mock = toy().join("mock.json");
    Command::new(env!("CARGO_BIN_EXE_causalrag"))
        .arg("--mock")
        .arg(&mock)
        .args(args)
        .env("SOURCE_DATE_EPOCH", EPOCH)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn causalrag")
}

pub fn stdout_ok(args: &[&str]) -> String {
    let out = causalrag(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

/// Compares `actual` with the named golden file. `UPDATE_GOLDEN=1` rewrites it.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return Ok(());
    }
    let expected = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if expected == actual {
        return Ok(());
    }
    let line = expected
        .lines()
        .zip(actual.lines())
        .position(|(a, b)| a != b)
        .unwrap_or_else(|| expected.lines().count().min(actual.lines().count()));
    Err(format!("{name} differs from golden at line {}", line + 1))
}

pub struct GoldenRun {
    pub index_stdout: String,
    pub ask_stdout: String,
    pub eval_stdout: String,
    pub report: String,
    pub manifests: String,
}

pub const ASK_QUERY: &str = "Why did the vendor win the contract award?";

/// `index`, `ask --trace` and `eval` in a fresh directory.
pub fn golden_run() -> GoldenRun {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("indexes");
    let root_s = root.to_str().unwrap();
    let index_stdout = stdout_ok(&["index", toy().join("docs").to_str().unwrap(), root_s]);
    let ask_stdout = stdout_ok(&["ask", root.join("pitch").to_str().unwrap(), ASK_QUERY, "--trace"]);
    let report_path = dir.path().join("report.json");
    let eval_stdout = stdout_ok(&[
        "eval",
        "--index-root",
        root_s,
        "--dataset",
        toy().join("dataset.jsonl").to_str().unwrap(),
        "--report-out",
        report_path.to_str().unwrap(),
    ]);
    let report = std::fs::read_to_string(&report_path).unwrap();
    let manifests = ["pitch", "ports"]
        .iter()
        .map(|id| std::fs::read_to_string(root.join(id).join("manifest.json")).unwrap())
        .collect::<Vec<_>>()
        .join("");
    GoldenRun {
        index_stdout,
        ask_stdout,
        eval_stdout,
        report,
        manifests,
    }
}

pub fn check_golden_run(run: &GoldenRun) -> Result<(), String> {
    check_golden("index.stdout", &run.index_stdout)?;
    check_golden("ask_trace.stdout", &run.ask_stdout)?;
    check_golden("eval.stdout", &run.eval_stdout)?;
    check_golden("eval_report.json", &run.report)?;
    check_golden("manifests.json", &run.manifests)
}
