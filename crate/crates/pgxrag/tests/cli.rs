mod common;

use common::*;

const QUESTION: &str = "What should be done for a CYP2C19 poor metabolizer on clopidogrel?";

#[test]
fn ask_offline_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let idx = ingest(dir.path(), "p1.idx", "CPIC");
    let args = ["ask", QUESTION, "--phase", "1", "--index", idx.to_str().unwrap(), "--backend", "offline"];
    let first = ok(&args);
    assert_eq!(first, ok(&args));
    assert!(first.contains("cpic-cyp2c19-clopidogrel#0"));
    let json: serde_json::Value = serde_json::from_str(&ok(&[&args[..], &["--json"]].concat())).unwrap();
    assert_eq!(json["summaries"].as_array().unwrap().len(), 4);
    assert_eq!(json["phase"], "phase1");
}

#[test]
fn errors_are_one_classified_line() {
    let dir = tempfile::tempdir().unwrap();
    let mixed = ingest(dir.path(), "all.idx", "CPIC,PharmGKB");
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["ask", "q", "--phase", "1", "--index", "/nonexistent.idx"], "IoFailure"),
        (vec!["ask", "q", "--phase", "1", "--index", mixed.to_str().unwrap()], "ConfigMismatch"),
        (vec!["ask", "q", "--phase", "7", "--index", mixed.to_str().unwrap()], "InvalidArgument"),
        (vec!["eval", "validate", "--dataset", "/nonexistent.jsonl"], "MissingFile"),
        (vec!["ingest", "--corpus", "corpus", "--sources", "DrugBank", "--out", "x"], "InvalidArgument"),
        (
            vec!["ask", "q", "--phase", "2", "--index", mixed.to_str().unwrap(), "--backend", "cassette"],
            "BackendUnavailable",
        ),
    ];
    for (args, class) in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(1), "{args:?}");
        let err = stderr(&o);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with(&format!("ERROR {class}: ")), "{args:?}: {err}");
    }
}

#[test]
fn corrupt_index_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let idx = ingest(dir.path(), "p1.idx", "CPIC");
    let mut bytes = std::fs::read(&idx).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x40;
    std::fs::write(&idx, bytes).unwrap();
    let o = run(&["ask", "q", "--phase", "1", "--index", idx.to_str().unwrap()]);
    assert!(stderr(&o).starts_with("ERROR CorruptIndex: "), "{}", stderr(&o));
}

#[test]
fn eval_run_writes_manifest_and_records() {
    let dir = tempfile::tempdir().unwrap();
    let idx = ingest(dir.path(), "all.idx", "CPIC,PharmGKB");
    let out = dir.path().join("phase2.jsonl");
    ok(&[
        "eval", "run", "--dataset", "data/dataset_260.jsonl", "--phase", "2", "--index",
        idx.to_str().unwrap(), "--out", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("phase2.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 260);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["group"], "phase2");
        assert_eq!(v["manifest_digest"], manifest["manifest_digest"]);
    }
    assert_eq!(manifest["phase_config"]["phase"], "phase2");
}

#[test]
fn validate_names_violations() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ok(&["eval", "validate", "--dataset", "data/dataset_260.jsonl"]).contains("conformant"));
    let text = std::fs::read_to_string(asset("data/dataset_260.jsonl")).unwrap();
    let trimmed: Vec<&str> = text.lines().skip(1).collect();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, trimmed.join("\n")).unwrap();
    let o = run(&["eval", "validate", "--dataset", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let err = stderr(&o);
    assert!(err.starts_with("ERROR DatasetViolation: "));
    assert!(err.contains(first["guideline_key"].as_str().unwrap()), "{err}");
}

#[test]
fn metrics_report_columns() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = ok(&[
        "eval", "metrics", "--annotations", "fixtures/subset20_phase1.jsonl", "fixtures/subset20_phase2.jsonl",
        "fixtures/subset20_gpt4omini.jsonl", "--groups", "phase1,phase2,gpt4omini", "--report",
        report.to_str().unwrap(), "--wilcoxon", "phase1:phase2:accuracy:greater",
    ]);
    let rows: Vec<Vec<&str>> = out.lines().skip(1).take(3).map(|l| l.split_whitespace().collect()).collect();
    let recall: Vec<&str> = rows.iter().map(|r| r[6]).collect();
    assert_eq!(recall, ["0.97", "0.99", "0.85"]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    assert_eq!(json["groups"].as_array().unwrap().len(), 3);
    assert_eq!(json["wilcoxon"][0]["result"]["w_statistic"], 10.5);
}

#[test]
fn wilcoxon_from_pair_fixtures() {
    let p1p2 = ok(&["eval", "wilcoxon", "--pairs", "fixtures/wilcoxon_p1p2.json"]);
    assert!(p1p2.contains("W = 10.5"), "{p1p2}");
    assert!(p1p2.contains("not significant"));
    let p2gpt = ok(&["eval", "wilcoxon", "--pairs", "fixtures/wilcoxon_p2gpt.json"]);
    assert!(p2gpt.contains(", significant"), "{p2gpt}");
}

#[test]
fn quiz_ladder() {
    for (file, expected) in [
        ("answers_phase3", "18/20 = 90%"),
        ("answers_claude37", "17/20 = 85%"),
        ("answers_gemini20", "16/20 = 80%"),
        ("answers_gpt4omini", "14/20 = 70%"),
    ] {
        let out = ok(&["quiz", "score", "--items", "data/quiz20.json", "--answers", &format!("fixtures/quiz/{file}.json")]);
        assert_eq!(out.trim(), expected);
    }
}

#[test]
fn ivacaftor_cassette_replays_recorded_answer() {
    let dir = tempfile::tempdir().unwrap();
    let idx = ingest(dir.path(), "p1.idx", "CPIC");
    let question = std::fs::read_to_string(asset("fixtures/cassettes/ivacaftor_question.txt")).unwrap();
    let expected = std::fs::read_to_string(asset("fixtures/cassettes/ivacaftor_answer.txt")).unwrap();
    let out = ok(&[
        "ask", &question, "--phase", "1", "--index", idx.to_str().unwrap(), "--backend", "cassette",
        "--cassette", "fixtures/cassettes/ivacaftor.jsonl", "--json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["answer"], expected.as_str());
    assert_eq!(v["backend_tag"], "cassette:gpt-4o-mini");
    assert_eq!(v["summaries"].as_array().unwrap().len(), 4);
    assert!(v["hits"].as_array().unwrap().iter().any(|h| h["chunk_id"] == "cpic-cftr-ivacaftor#0"));

    // a different question has no recording
    let o = run(&[
        "ask", "What is ivacaftor?", "--phase", "1", "--index", idx.to_str().unwrap(), "--backend", "cassette",
        "--cassette", "fixtures/cassettes/ivacaftor.jsonl",
    ]);
    assert!(stderr(&o).starts_with("ERROR MissingRecording: "), "{}", stderr(&o));
}
