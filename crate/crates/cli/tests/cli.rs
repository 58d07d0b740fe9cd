use serde_json::Value;
use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn critique(args: &[&str]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_critique"));
    c.current_dir(fixtures());
    for var in ["CRITIQUE_INDEX", "CRITIQUE_EMBEDDER", "CRITIQUE_PROVIDER", "CRITIQUE_EXEMPLARS", "CRITIQUE_K"] {
        c.env_remove(var);
    }
    c.args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no error JSON in {text:?}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn transform_prints_the_preference() {
    let o = critique(&["--config", "app.toml", "transform", "--critique", "It looks too casual."]);
    assert_eq!(stdout(&o), "I prefer a fancier place.\n");
}

#[test]
fn transform_json_lists_completions() {
    let o = critique(&["--config", "app.toml", "transform", "--critique", "It looks too casual.", "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["preference"], "I prefer a fancier place.");
    assert_eq!(v["raw_completions"].as_array().unwrap().len(), 3);
    assert_eq!(v["selected_index"], 0);
}

#[test]
fn crit_and_pref_searches_differ() {
    let run = |mode: &str| {
        let o = critique(&["--config", "app.toml", "search", "--critique", "It looks too casual.", "--mode", mode, "--json"]);
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        v.as_array()
            .unwrap()
            .iter()
            .map(|a| a["candidate"]["sentence"].as_str().unwrap().to_string())
            .collect::<Vec<_>>()
    };
    let (crit, pref) = (run("CRIT"), run("PREF"));
    assert_eq!(crit.len(), 3);
    assert_ne!(crit, pref);
    assert!(pref.contains(&"Elegant, upscale and classy place for a special occasion.".to_string()));
}

#[test]
fn cassette_miss_is_provider_down() {
    let o = critique(&["--config", "app.toml", "transform", "--critique", "Nothing recorded for this one."]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(error_json(&o)["code"], "PROVIDER_DOWN");
}

#[test]
fn missing_config_is_bad_input() {
    let o = critique(&["--config", "does-not-exist.toml", "transform", "--critique", "x"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["code"], "BAD_INPUT");
}

#[test]
fn search_without_index_is_no_index() {
    let o = critique(&["--embedder", "hashbag", "search", "--statement", "quiet place"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(error_json(&o)["code"], "NO_INDEX");
}

#[test]
fn chat_script_runs_three_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("script.txt");
    std::fs::write(&script, "It doesn't look good for a date\nIt has a freaking band!\nI don't really like seafood.\n").unwrap();
    let o = critique(&["--config", "app.toml", "chat", "--script", script.to_str().unwrap(), "--json"]);
    let rounds: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rounds.len(), 3);
    assert_eq!(rounds[0]["preference"], "I prefer a more romantic place.");
    for (i, r) in rounds.iter().enumerate() {
        assert_eq!(r["index"], i + 1);
    }
}

#[test]
fn chat_reads_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_critique"))
        .current_dir(fixtures())
        .args(["--config", "app.toml", "chat", "--mode", "CRIT"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"It doesn't look good for a date\n").unwrap();
    let text = stdout(&child.wait_with_output().unwrap());
    assert!(text.starts_with("[1] It doesn't look good for a date\n"), "{text}");
    assert!(!text.contains("preference:"));
    assert!(text.contains("recommend:"));
}

#[test]
fn dataset_convert_resolves_parts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    std::fs::write(
        &csv,
        "id,critique,preference,rounds\n\
         a,It is too loud.,I prefer a quiet place.,1\n\
         b,I don't like seafood.,I prefer no seafood.,1\n\
         c,It is too loud. I don't like seafood.,I prefer a quiet place. I prefer no seafood.,2\n",
    )
    .unwrap();
    let out = dir.path().join("out.jsonl");
    stdout(&critique(&["dataset", "convert", "--csv", csv.to_str().unwrap(), "--out", out.to_str().unwrap()]));
    let records: Vec<Value> = std::fs::read_to_string(&out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 3);
    assert_eq!(records[2]["parts"], serde_json::json!(["a", "b"]));
}

#[test]
fn dataset_convert_rejects_unresolvable_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    std::fs::write(&csv, "critique,preference,rounds\nToo loud. Too dark.,I prefer calm.,2\n").unwrap();
    let o = critique(&["dataset", "convert", "--csv", csv.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eval_run_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = critique(&["--config", "app.toml", "eval", "run", "--interpret", "--out", out.to_str().unwrap()]);
    assert!(!stdout(&o).is_empty());
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(report.is_object());
}
