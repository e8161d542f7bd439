use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gui-reasoner")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = bin(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn synth_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth", "--seed", "7", "--out", "a.json"]);
    ok(dir.path(), &["synth", "--seed", "7", "--out", "b.json"]);
    ok(dir.path(), &["synth", "--seed", "8", "--out", "c.json"]);
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_ne!(read("a.json"), read("c.json"));
}

#[test]
fn oracle_eval_prints_all_hundreds() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["synth"]);
    let table = ok(dir.path(), &["eval", "--oracle", "--tasks", "all"]);
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cells: Vec<&str> = row.split_whitespace().collect();
        assert_eq!(&cells[1..5], &["100.0"; 4], "{row}");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report[0]["step_sr"], 1.0);
    assert_eq!(report[1]["mode"], "high");
}

#[test]
fn unknown_subcommand_fails_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["bogus"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_inputs_and_bad_config_fail_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(dir.path(), &["eval", "--oracle"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("world.json"));
    std::fs::write(dir.path().join("bad.toml"), "[rl]\nk = 1\n").unwrap();
    let out = bin(dir.path(), &["--config", "bad.toml", "synth"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn score_reads_jsonl_and_writes_breakdowns() {
    let dir = tempfile::tempdir().unwrap();
    let lines = [
        r#"{"raw":"<think>\nSub-goal: open settings\n</think>\nclick(30,20)","ground_truth":{"task_kind":"agent","gt_action":{"kind":"click","point":[30,20]},"gt_bbox":[10,10,50,30],"gt_subgoal":"open settings"}}"#,
        r#"{"raw":"click(30,20)","ground_truth":{"task_kind":"agent","gt_action":{"kind":"click","point":[30,20]}}}"#,
        r#"{"raw":"<think>x</think>answer(0.50)","ground_truth":{"task_kind":"other","gt_answer":"1/2"},"config":{"w_f":0.5,"w_a":0.5}}"#,
    ];
    std::fs::write(dir.path().join("in.jsonl"), lines.join("\n")).unwrap();
    let out = ok(dir.path(), &["score", "in.jsonl"]);
    let recs: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(recs.len(), 3);
    assert_eq!(recs[0]["total"], 1.0);
    assert_eq!(recs[0]["subgoal_raw"], 10);
    for key in ["format", "type", "param", "subgoal_raw", "subgoal", "acc", "total"] {
        assert!(recs[0].get(key).is_some(), "{key}");
    }
    assert_eq!(recs[1]["total"], 0.0);
    assert_eq!(recs[2]["total"], 1.0);

    let mut child = Command::new(env!("CARGO_BIN_EXE_gui-reasoner"))
        .arg("score")
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child.stdin.take().unwrap().write_all(lines[1].as_bytes()).unwrap();
    let piped = child.wait_with_output().unwrap();
    assert!(piped.status.success());
    assert_eq!(String::from_utf8(piped.stdout).unwrap().lines().count(), 1);

    std::fs::write(dir.path().join("bad.jsonl"), "{not json}\n").unwrap();
    let out = bin(dir.path(), &["score", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
}

#[test]
fn stages_chain_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--seed", "3"]);
    ok(d, &["pretrain"]);
    ok(d, &["distill", "--bottlenecks", "bn.jsonl"]);
    ok(d, &["pretrain", "--sft", "sft.jsonl", "--init", "base.json", "--out", "sft_policy.json"]);
    ok(d, &["forge", "--prone", "prone.jsonl"]);
    std::fs::write(d.join("short.toml"), "[rl]\nsteps = 20\nbatch_size = 8\n").unwrap();
    ok(d, &["--config", "short.toml", "train", "--scenarios", "scenarios.jsonl", "--curve", "curve.csv"]);
    let table = ok(d, &["eval", "--policy", "policy.json", "--mode", "high"]);
    assert_eq!(table.lines().count(), 2);
    let log = std::fs::read_to_string(d.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 20);
    let curve = std::fs::read_to_string(d.join("curve.csv")).unwrap();
    assert!(curve.starts_with("step,overall,low,high,grounding\n"));
    for f in ["bn.jsonl", "prone.jsonl", "scenarios.jsonl", "sft_policy.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let out = bin(d, &["pretrain", "--init", "base.json"]);
    assert!(!out.status.success());
}
