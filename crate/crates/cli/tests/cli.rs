use std::path::Path;
use std::process::Command;

use clap::Parser;
use govaudit_cli::{run, Cli};
use govaudit_core::corpus::{read_corpus, Role};
use govaudit_core::fixtures;

fn govaudit(args: &[&str]) -> Result<(), String> {
    let cli = Cli::try_parse_from(std::iter::once("govaudit").chain(args.iter().copied())).map_err(|e| e.to_string())?;
    run(cli).map_err(|e| format!("{e:#}"))
}

fn stdout_of(args: &[&str]) -> String {
    let out = Command::new(env!("CARGO_BIN_EXE_govaudit")).args(args).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fx(rel: &str) -> String {
    fixtures::path(rel).display().to_string()
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

#[test]
fn build_corpus_with_default_tokenizer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("safe.corpus.jsonl");
    govaudit(&["build-corpus", "--in", &fx("safe.docs.jsonl"), "--role", "safe", "--out", &s(&out)]).unwrap();
    let c = read_corpus(&out).unwrap();
    assert_eq!(c.role, Role::Safe);
    assert_eq!(c.tokenizer, "words");
    assert_eq!(c.chunk_len, 512);
    assert!(!c.chunks.is_empty());
}

#[test]
fn chunk_length_below_minimum_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.corpus.jsonl");
    let e = govaudit(&["build-corpus", "--in", &fx("safe.docs.jsonl"), "--role", "safe", "--chunk-len", "2", "--out", &s(&out)])
        .unwrap_err();
    assert!(e.contains("below the minimum"), "{e}");
}

#[test]
fn malformed_weights_are_rejected() {
    let e = govaudit(&["unlearn", "--model", "m", "--target", "t", "--safe", "s", "--weights", "1,2", "--out", "o"]).unwrap_err();
    assert!(e.contains("weights"), "{e}");
}

#[test]
fn tally_and_correlate_on_study_set() {
    let dir = tempfile::tempdir().unwrap();
    let diffs = dir.path().join("diffs.csv");
    let out = stdout_of(&[
        "tally",
        "--annotations",
        &fx("study/annotations.jsonl"),
        "--by",
        "query",
        "--queries",
        &fx("queries.jsonl"),
        "--diffs-out",
        &s(&diffs),
    ]);
    assert!(out.starts_with("group\tphase\ttype1\ttype2\ttype2*\n"));
    assert!(out.contains("control query 4: difference 0, intrusiveness guard passed"), "{out}");

    let corr = dir.path().join("corr.json");
    let line = stdout_of(&[
        "correlate",
        "--diffs",
        &s(&diffs),
        "--prevalence",
        &fx("study/prevalence.csv"),
        "--control",
        "4",
        "--out",
        &s(&corr),
    ]);
    assert!(line.contains("n = 18") && line.contains("significant at 0.05"), "{line}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&corr).unwrap()).unwrap();
    assert!(json["correlation"]["r"].as_f64().unwrap() < 0.0);
    assert_eq!(json["points"].as_array().unwrap().len(), 18);
}

#[test]
fn diffs_need_query_grouping() {
    let dir = tempfile::tempdir().unwrap();
    let e = govaudit(&[
        "tally",
        "--annotations",
        &fx("study/annotations.jsonl"),
        "--by",
        "model",
        "--diffs-out",
        &s(&dir.path().join("d.csv")),
    ])
    .unwrap_err();
    assert!(e.contains("--by query"), "{e}");
}

#[test]
fn probe_writes_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = stdout_of(&["probe", "--records", &fx("records.jsonl"), "--models", &fx("probe/families.toml"), "--out", &s(dir.path())]);
    assert!(out.contains("non-control: 5 recalled"), "{out}");
    assert!(out.contains("of 195"), "{out}");
    let csv = std::fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    assert!(csv.lines().count() > 1);
    assert!(dir.path().join("matrix.json").is_file());
}

#[test]
fn report_without_unlearning_telemetry() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    std::fs::create_dir_all(&run_dir).unwrap();
    std::fs::copy(fixtures::path("study/annotations.jsonl"), run_dir.join("annotations.jsonl")).unwrap();
    std::fs::copy(fixtures::path("study/prevalence.csv"), run_dir.join("prevalence.csv")).unwrap();
    std::fs::copy(fixtures::path("queries.jsonl"), run_dir.join("queries.jsonl")).unwrap();
    let out = dir.path().join("report");
    govaudit(&["report", "--run", &s(&run_dir), "--out", &s(&out)]).unwrap();
    for f in ["fig1.png", "fig2.csv", "fig3.csv", "fig4.png", "summary.json"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!out.join("curves.csv").exists());
}

#[test]
fn report_needs_annotations() {
    let dir = tempfile::tempdir().unwrap();
    let e = govaudit(&["report", "--run", &s(dir.path()), "--out", &s(&dir.path().join("r"))]).unwrap_err();
    assert!(e.contains("annotations.jsonl"), "{e}");
}
