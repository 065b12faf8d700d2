mod common;

use common::{causalrag, check_golden, stdout_ok, toy};

fn code(args: &[&str]) -> (i32, String) {
    let out = causalrag(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn toy_corpus_matches_golden_files() {
    let run = common::golden_run();
    common::check_golden_run(&run).unwrap();
}

#[test]
fn trace_lists_each_seed_once() {
    let run = common::golden_run();
    let seeds: Vec<&str> = run
        .ask_stdout
        .lines()
        .skip_while(|l| *l != "seeds:")
        .skip(1)
        .take_while(|l| l.starts_with("  "))
        .collect();
    assert_eq!(seeds.len(), 3);
    let mut ids: Vec<&str> = seeds.iter().map(|l| l.trim().rsplit_once(' ').unwrap().0).collect();
    ids.sort();
    ids.dedup();
    assert_eq!(ids.len(), 3);
    assert!(run.ask_stdout.contains("prompt_digest: "));
}

#[test]
fn sweep_and_question_generation_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("idx");
    stdout_ok(&["index", toy().join("docs").to_str().unwrap(), root.to_str().unwrap()]);
    let grid = stdout_ok(&[
        "sweep",
        "--index-root",
        root.to_str().unwrap(),
        "--dataset",
        toy().join("dataset.jsonl").to_str().unwrap(),
        "--k",
        "1,3,5",
        "--s",
        "1,3,5",
    ]);
    check_golden("sweep.stdout", &grid).unwrap();
    assert!(!grid.contains("undefined"));

    let out = dir.path().join("questions.jsonl");
    let questions = stdout_ok(&[
        "gen-questions",
        toy().join("docs/pitch.txt").to_str().unwrap(),
        "-n",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(questions.lines().count(), 5);
    check_golden("gen_questions.stdout", &questions).unwrap();
    assert_eq!(std::fs::read_to_string(out).unwrap().lines().count(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("idx");
    stdout_ok(&["index", toy().join("docs").to_str().unwrap(), root.to_str().unwrap()]);
    let pitch = root.join("pitch");

    assert_eq!(code(&["ask", pitch.to_str().unwrap(), "why", "--k", "0"]).0, 64);
    assert_eq!(code(&["frobnicate"]).0, 64);
    assert_eq!(code(&["--help"]).0, 0);

    let (c, err) = code(&["ask", dir.path().join("missing").to_str().unwrap(), "why"]);
    assert_eq!(c, 2, "{err}");

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    let (c, err) = code(&["index", empty.to_str().unwrap(), dir.path().join("o").to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains("no documents"), "{err}");

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"document_id\":\"pitch\",\"question\":\"q?\",\"reference_set\":[\"a\"]}\n\n{oops\n").unwrap();
    let (c, err) = code(&["eval", "--index-root", root.to_str().unwrap(), "--dataset", bad.to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains(":3:"), "{err}");
}

#[test]
fn missing_credentials_exit_with_provider_code() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("idx");
    stdout_ok(&["index", toy().join("docs").to_str().unwrap(), root.to_str().unwrap()]);
    let config = dir.path().join("live.toml");
    std::fs::write(&config, "[gateway]\napi_key_env = \"CAUSALRAG_CLI_TEST_UNSET_KEY\"\n").unwrap();
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_causalrag"))
        .args(["--config", config.to_str().unwrap(), "ask", root.join("pitch").to_str().unwrap(), "why?"])
        .env_remove("CAUSALRAG_CLI_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("idx");
    stdout_ok(&["index", toy().join("docs").to_str().unwrap(), root.to_str().unwrap()]);
    let config = dir.path().join("c.toml");
    std::fs::write(&config, "[retrieval]\nk = 1\ns = 0\n").unwrap();
    let pitch = root.join("pitch");
    let ask = |extra: &[&str]| {
        let mut args = vec!["--config", config.to_str().unwrap(), "ask", pitch.to_str().unwrap()];
        args.push(common::ASK_QUERY);
        args.push("--trace");
        args.extend_from_slice(extra);
        stdout_ok(&args)
    };
    assert!(ask(&[]).contains("k=1 s=0"));
    assert!(ask(&["--k", "2"]).contains("k=2 s=0"));
}
