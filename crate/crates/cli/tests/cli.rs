use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn qinterp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qinterp"))
        .args(args)
        .env_remove("QINTERP_KB")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn table1() -> String {
    fixture("table1").to_string_lossy().into_owned()
}

#[test]
fn segment_top_line_is_rank_one() {
    let out = stdout(&qinterp(&["segment", "--kb", &table1(), "new york times square dance"]));
    let first: serde_json::Value = serde_json::from_str(out.lines().next().unwrap()).unwrap();
    assert_eq!(first["rank"], 1);
    assert_eq!(first["segmentation"], "new york times | square dance");
    assert_eq!(first["retained"], true);
    assert_eq!(out.lines().count(), 16);
}

#[test]
fn kb_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_qinterp"))
        .args(["interpret", "--top-k", "3", "new york times square dance"])
        .env("QINTERP_KB", table1())
        .output()
        .unwrap();
    let body: serde_json::Value = serde_json::from_str(stdout(&out).trim()).unwrap();
    assert_eq!(body["interpretations"].as_array().unwrap().len(), 3);
    for key in ["segmentation_ms", "linking_ms", "combination_ms", "total_ms"] {
        assert!(body["timings"][key].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(qinterp(&["segment", "--kb", &table1(), "--bogus", "x"]).status.code(), Some(2));
    assert_eq!(qinterp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qinterp(&["interpret", "--kb", &table1(), "--alpha", "3", "x"]).status.code(), Some(2));
}

#[test]
fn failures_report_category() {
    let out = qinterp(&["interpret", "--kb", &table1(), "   "]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error[query]"));
    let missing = qinterp(&["interpret", "--kb", "/definitely/not/here", "x"]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn batch_run_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.jsonl");
    let corpus = fixture("mini").join("corpus.jsonl");
    let kb = fixture("mini");
    stdout(&qinterp(&[
        "interpret",
        "--kb",
        kb.to_str().unwrap(),
        "--batch",
        corpus.to_str().unwrap(),
        "--output",
        run.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read_to_string(&run).unwrap().lines().count(), 25);
    let report = stdout(&qinterp(&["evaluate", "--corpus", corpus.to_str().unwrap(), "--run", run.to_str().unwrap()]));
    let v: serde_json::Value = serde_json::from_str(report.trim()).unwrap();
    assert_eq!(v["interpretation"]["evaluated"], 24);
    assert_eq!(v["interpretation"]["skipped"], 1);
    let r = v["interpretation"]["partial"]["recall"].as_f64().unwrap();
    assert!(r > 0.0 && r <= 1.0);
    assert!(v["interpretation"]["mean_latency_ms"].as_f64().is_some());
    let pretty = stdout(&qinterp(&[
        "evaluate",
        "--pretty",
        "--corpus",
        corpus.to_str().unwrap(),
        "--run",
        run.to_str().unwrap(),
    ]));
    assert!(pretty.contains("partial") && pretty.contains("complete"));
}

#[test]
fn baseline_gives_one_interpretation() {
    let out = stdout(&qinterp(&["interpret", "--kb", &table1(), "--baseline", "new york times square dance"]));
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    let interps = v["interpretations"].as_array().unwrap();
    assert_eq!(interps.len(), 1);
    assert_eq!(interps[0]["links"], serde_json::json!(["The_New_York_Times", "Square_Dance"]));
}

#[test]
fn split_is_reproducible() {
    let corpus = fixture("mini").join("corpus.jsonl");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        stdout(&qinterp(&[
            "split",
            "--corpus",
            corpus.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
            "--seed",
            "11",
            "--max-iters",
            "500",
        ]));
    }
    for file in ["train.ids", "test.ids", "split.json"] {
        assert_eq!(
            std::fs::read(a.path().join(file)).unwrap(),
            std::fs::read(b.path().join(file)).unwrap(),
            "{file}"
        );
    }
}

#[test]
fn bench_reports_percentiles() {
    let queries = fixture("mini").join("queries.txt");
    let kb = fixture("mini");
    let out = stdout(&qinterp(&[
        "bench",
        "--kb",
        kb.to_str().unwrap(),
        "--queries",
        queries.to_str().unwrap(),
        "--repetitions",
        "1",
    ]));
    let v: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(v["queries"], 25);
    assert_eq!(v["samples"], 25);
    for key in ["mean_ms", "p50_ms", "p95_ms"] {
        assert!(v[key].as_f64().unwrap() > 0.0);
    }
    assert!(v["p50_ms"].as_f64() <= v["p95_ms"].as_f64());
}

#[test]
fn ingest_then_query_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let snap = dir.path().join("snap");
    let out = stdout(&qinterp(&["ingest", "--source", &table1(), "--out", snap.to_str().unwrap()]));
    let manifest: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(manifest["ngrams"], 7);
    let from_sources = stdout(&qinterp(&["segment", "--kb", &table1(), "new york times square dance"]));
    let from_snapshot = stdout(&qinterp(&["segment", "--kb", snap.to_str().unwrap(), "new york times square dance"]));
    assert_eq!(from_sources, from_snapshot);
}

#[test]
fn link_lists_every_segment() {
    let out = stdout(&qinterp(&["link", "--kb", &table1(), "square dance"]));
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    let whole = lines.iter().find(|l| l["segment"] == "square dance").unwrap();
    let first = &whole["candidates"][0];
    assert_eq!(first["match"], "exact");
    assert!(first["commonness"].as_f64().unwrap() > 0.0);
}
