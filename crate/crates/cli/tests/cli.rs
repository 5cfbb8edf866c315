use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_numscore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_stdin(args: &[&str], stdin: &str) -> Output {
    let mut child = bin()
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    // usage errors can exit before reading stdin
    if let Err(e) = child.stdin.take().unwrap().write_all(stdin.as_bytes()) {
        assert_eq!(e.kind(), std::io::ErrorKind::BrokenPipe);
    }
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn jsonl(text: &str) -> Vec<Value> {
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const ATTRS: &str = r#"{"eye_catching":7,"composition":6,"subject_integrity":3,"subject_clutter":3,"background_clutter":2,"level_shot":1,"image_clarity":3,"exposure":3,"saturation":3}"#;

#[test]
fn quantize_worked_example() {
    let o = run_stdin(&["quantize", "--m", "3"], "3.9845\n");
    assert!(o.status.success());
    assert_eq!(stdout(&o), "3.98\n");
    let o = run_stdin(&["quantize", "--m", "2"], "3.9845\n");
    assert_eq!(stdout(&o), "4.0\n");
}

#[test]
fn bad_lines_are_reported_and_exit_one() {
    let o = run_stdin(&["quantize"], "1.5\n\nnope\n10.5\n2\n");
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "1.50\n2.00\n");
    let err = stderr(&o);
    assert!(err.contains("-:3:"), "{err}");
    assert!(err.contains("-:4:"), "{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["quantize", "--nope"]).status.code(), Some(2));
    assert_eq!(
        run(&["ncm", "--input", "/definitely/not/here.jsonl"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run_stdin(&["quantize", "--m", "0"], "1\n").status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["simulate", "--start-prob", "1.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn ncm_window_on_simulated_series() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("rec.jsonl");
    let series = dir.path().join("series.csv");
    let o = run(&[
        "simulate",
        "--kind",
        "naive",
        "--start-prob",
        "0.15",
        "--end-prob",
        "0.9",
        "--steps",
        "200",
        "--batch",
        "4",
        "--seed",
        "7",
        "--records",
        s(&records),
        "--output",
        s(&series),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let curve = dir.path().join("curve.csv");
    let o = run(&[
        "ncm",
        "--input",
        s(&records),
        "--window",
        "100",
        "--curve",
        s(&curve),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 201);
    assert!(table.starts_with("step,n_samples,ncm,ncm_star,ce,expectation,expectation_star\n"));
    // recomputing from the exported records reproduces the simulator output
    assert_eq!(table, fs::read_to_string(&series).unwrap());

    let curve = fs::read_to_string(&curve).unwrap();
    let rows: Vec<&str> = curve.lines().collect();
    assert_eq!(rows[0], "metric,window,first,last,ratio_pct");
    assert_eq!(rows.len(), 4);
    let ce: Vec<&str> = rows
        .iter()
        .find(|r| r.starts_with("ce,"))
        .unwrap()
        .split(',')
        .collect();
    assert_eq!(ce[1], "100");
    assert!(ce[4].parse::<f64>().unwrap() < 0.0);

    let o = run(&["ncm", "--input", s(&records), "--window", "300"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn sort_eval_on_generated_trials() {
    let dir = TempDir::new().unwrap();
    let trials = dir.path().join("trials.jsonl");
    let o = run(&[
        "sort-eval",
        "--generate",
        "200",
        "--seed",
        "3",
        "--output",
        s(&trials),
    ]);
    assert!(o.status.success());
    let again = run(&["sort-eval", "--generate", "200", "--seed", "3"]);
    assert_eq!(stdout(&again), fs::read_to_string(&trials).unwrap());

    // answer every trial correctly, half as arrays and half as free text
    let mut answered = String::new();
    for (i, t) in jsonl(&fs::read_to_string(&trials).unwrap())
        .into_iter()
        .enumerate()
    {
        let mut gt: Vec<f64> = t["gt"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        assert_eq!(gt.len(), 10);
        assert!(gt.iter().all(|v| (1.0..10.0).contains(v)));
        assert!(t["prompt"].as_str().unwrap().contains('['));
        let orig = gt.clone();
        gt.sort_by(f64::total_cmp);
        let line = if i % 2 == 0 {
            serde_json::json!({"id": t["id"], "gt": orig, "pred": gt})
        } else {
            let listed: Vec<String> = gt.iter().map(f64::to_string).collect();
            serde_json::json!({"id": t["id"], "gt": orig, "answer": format!("Sorted: [{}]", listed.join(", "))})
        };
        answered.push_str(&line.to_string());
        answered.push('\n');
    }
    let answered = write(&dir, "answered.jsonl", &answered);
    let per = dir.path().join("per.csv");
    let o = run(&["sort-eval", "--input", s(&answered), "--per-trial", s(&per)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        stdout(&o),
        "trials,accuracy,recall,hallucination\n200,1,1,0\n"
    );
    assert_eq!(fs::read_to_string(&per).unwrap().lines().count(), 201);

    let fixture = write(
        &dir,
        "row3.jsonl",
        r#"{"id":"r3","gt":[9.0,2.0,2.0,8.0,1.51,8.0,3.6,9.72,6.0,8.3],"answer":"[1.51, 2.0, 2.0, 3.6, 6.0, 8.0, 8.0, 8.3, 8.72, 9.0, 9.72]"}"#,
    );
    let o = run(&["sort-eval", "--input", s(&fixture)]);
    let row: Vec<f64> = stdout(&o)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert_eq!(row[2], 1.0);
    assert!((row[3] - 1.0 / 11.0).abs() < 1e-12);
}

#[test]
fn build_then_parse_round_trip() {
    let dir = TempDir::new().unwrap();
    let stage1 = write(
        &dir,
        "s1.jsonl",
        &format!("{{\"id\":\"a\",\"attributes\":{ATTRS},\"reason\":\"Strong diagonal lines.\"}}\n"),
    );
    let o = run(&["build-cot", "--stage", "1", "--input", s(&stage1)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let convs = jsonl(&stdout(&o));
    assert_eq!(convs.len(), 14);
    assert_eq!(convs[0]["meta"]["template"], "MIX");
    assert_eq!(convs[0]["meta"]["level_order"], "HIGH_TO_LOW");
    let o = run(&[
        "build-cot",
        "--stage",
        "1",
        "--mode",
        "attr",
        "--input",
        s(&stage1),
    ]);
    assert_eq!(jsonl(&stdout(&o)).len(), 10);

    let stage2 = write(
        &dir,
        "s2.jsonl",
        &format!("{{\"id\":\"a\",\"score\":\"6.72\",\"attributes\":{ATTRS}}}\n{{\"id\":\"b\",\"score\":\"3.99\"}}\n"),
    );
    let o = run(&[
        "build-cot",
        "--stage",
        "2",
        "--form",
        "q1r1",
        "--form",
        "q3r3",
        "--input",
        s(&stage2),
    ]);
    // b has no attributes for the chain-of-thought form
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("s2.jsonl:2:"));
    let convs = jsonl(&stdout(&o));
    assert_eq!(convs.len(), 3);
    assert_eq!(
        convs[0]["messages"][1]["content"],
        "The score of this image is 6.72."
    );

    let mut responses = String::new();
    for c in &convs {
        let line = serde_json::json!({
            "id": c["id"],
            "form": c["meta"]["template"],
            "response": c["messages"][1]["content"],
        });
        responses.push_str(&format!("{line}\n"));
    }
    responses.push_str("{\"id\":\"junk\",\"response\":\"no score here\"}\n");
    let responses = write(&dir, "resp.jsonl", &responses);
    let o = run(&["parse", "--input", s(&responses)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let parsed = jsonl(&stdout(&o));
    assert_eq!(parsed[0]["score"], "6.72");
    assert_eq!(parsed[1]["score"], "6.72");
    assert_eq!(
        parsed[1]["attributes"],
        serde_json::from_str::<Value>(ATTRS).unwrap()
    );
    assert_eq!(parsed[2]["score"], "3.99");
    assert_eq!(parsed[3]["ok"], false);
}

#[test]
fn merge_labels_join_and_grid() {
    let dir = TempDir::new().unwrap();
    let mos = write(
        &dir,
        "mos.jsonl",
        "{\"id\":\"a\",\"mos\":67.3}\n{\"id\":\"b\",\"mos\":10}\n{\"id\":\"x\",\"mos\":50}\n",
    );
    let attrs = write(
        &dir,
        "attrs.jsonl",
        &format!("{{\"id\":\"a\",\"attributes\":{ATTRS}}}\n{{\"id\":\"b\",\"attributes\":{ATTRS}}}\n{{\"id\":\"y\",\"attributes\":{ATTRS}}}\n"),
    );
    let skipped = dir.path().join("skipped.csv");
    let o = run(&[
        "merge-labels",
        "--mos",
        s(&mos),
        "--attrs",
        s(&attrs),
        "--source-lo",
        "0",
        "--source-hi",
        "100",
        "--skipped",
        s(&skipped),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let recs = jsonl(&stdout(&o));
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0]["score"], "6.72");
    assert_eq!(
        fs::read_to_string(&skipped).unwrap(),
        "id,reason\nx,no attributes\ny,no mos\n"
    );

    let bad = write(
        &dir,
        "bad.jsonl",
        "{\"id\":\"a\",\"mos\":67.3}\n{\"id\":\"b\"\n",
    );
    let o = run(&[
        "merge-labels",
        "--mos",
        s(&bad),
        "--attrs",
        s(&attrs),
        "--source-lo",
        "0",
        "--source-hi",
        "100",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.jsonl:2:"));
}

#[test]
fn fit_and_score_composite() {
    let dir = TempDir::new().unwrap();
    let training = |target: fn(f64, f64) -> f64| {
        let mut text = String::new();
        for i in 0..30u32 {
            let eye = 1 + i % 10;
            let comp = 1 + (i * 7) % 10;
            let attrs = ATTRS
                .replace("\"eye_catching\":7", &format!("\"eye_catching\":{eye}"))
                .replace("\"composition\":6", &format!("\"composition\":{comp}"));
            let feedback = target(eye as f64, comp as f64);
            text.push_str(&format!(
                "{{\"id\":\"{i}\",\"attributes\":{attrs},\"feedback\":{feedback}}}\n"
            ));
        }
        text
    };
    let train = write(&dir, "train.jsonl", &training(|e, c| 0.5 * e + 0.25 * c));
    let model = dir.path().join("model.json");
    let o = run(&[
        "fit-pls",
        "--input",
        s(&train),
        "--k",
        "2",
        "--rescale",
        "--output",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Value = serde_json::from_str(&fs::read_to_string(&model).unwrap()).unwrap();
    assert!((m["weights"][0].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((m["weights"][1].as_f64().unwrap() - 0.25).abs() < 1e-9);
    assert_eq!(m["attribute_order"][0], "eye_catching");

    let o = run(&[
        "score-composite",
        "--model",
        s(&model),
        "--input",
        s(&train),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("id,composite,grid_score\n"));
    assert_eq!(out.lines().count(), 31);

    // only two columns vary, and a target outside their span needs a third component
    let curved = write(&dir, "curved.jsonl", &training(|e, c| e * e + c));
    let o = run(&["fit-pls", "--input", s(&curved), "--k", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("3"), "{}", stderr(&o));
}

#[test]
fn config_supplies_defaults_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "cfg.json", r#"{"m": 2, "ncm": {"window": 3}}"#);
    let o = run_stdin(&["quantize", "--config", s(&cfg)], "3.9845\n");
    assert_eq!(stdout(&o), "4.0\n");
    let o = run_stdin(&["--config", s(&cfg), "quantize", "--m", "3"], "3.9845\n");
    assert_eq!(stdout(&o), "3.98\n");

    let unknown = write(&dir, "unknown.json", r#"{"k": 2}"#);
    assert_eq!(
        run_stdin(&["quantize", "--config", s(&unknown)], "1\n")
            .status
            .code(),
        Some(2)
    );
    let section = write(&dir, "section.json", r#"{"quantise": {"m": 2}}"#);
    assert_eq!(
        run_stdin(&["quantize", "--config", s(&section)], "1\n")
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn outputs_are_reproducible() {
    let a = run(&["simulate", "--steps", "20", "--window", "5", "--seed", "11"]);
    let b = run(&["simulate", "--steps", "20", "--window", "5", "--seed", "11"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}
