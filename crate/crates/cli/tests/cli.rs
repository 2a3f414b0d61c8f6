use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonabsolute"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn record(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn number(v: &Value) -> f64 {
    match v {
        Value::Number(n) => n.as_f64().unwrap(),
        Value::String(s) => match s.split_once('/') {
            Some((a, b)) => a.parse::<f64>().unwrap() / b.parse::<f64>().unwrap(),
            None => s.parse().unwrap(),
        },
        other => panic!("not a number: {other}"),
    }
}

fn gen_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let path = path.to_str().unwrap().to_string();
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", &path]);
    record(&full);
    path
}

#[test]
fn bound_catalog_entry() {
    let r = record(&["bound", "I_2", "--epsilon", "1/4"]);
    assert_eq!(r["results"]["bound"], "7");
    assert_eq!(r["mode"], "rational");
    assert_eq!(r["tolerance"], 0.0);
    assert_eq!(r["convention"], "last");
    assert_eq!(r["scenario"]["friend_inputs"], serde_json::json!([2, 2]));
}

#[test]
fn bound_chained_family() {
    let r = record(&["bound", "chained", "--m", "4", "--epsilon", "0"]);
    assert_eq!(r["results"]["bound"], "6");
    assert_eq!(r["results"]["ns_bound"], "8");
}

#[test]
fn bound_mermin_saturates_at_the_ns_maximum() {
    let r = record(&["bound", "mermin", "--epsilon", "1/8"]);
    assert_eq!(r["results"]["bound"], "3");
    // Beyond a quarter the relaxed set reaches every NS behavior.
    let r = record(&["bound", "mermin", "--epsilon", "1/2"]);
    assert_eq!(r["results"]["bound"], "4");
    assert_eq!(r["results"]["ns_bound"], "4");
}

#[test]
fn bound_float_mode_matches() {
    let r = record(&["bound", "I_5", "--epsilon", "1/8", "--mode", "float"]);
    assert!((number(&r["results"]["bound"]) - 2.5).abs() < 1e-9);
}

#[test]
fn bound_rejects_bad_input() {
    assert_eq!(run(&["bound", "I_9"]).status.code(), Some(1));
    assert_eq!(
        run(&["bound", "I_1", "--epsilon", "0.25x"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["bound"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn bound_from_inequality_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chsh.json");
    let ineq = nonabsolute::inequalities::chained(2).unwrap();
    std::fs::write(&path, ineq.to_json().to_string()).unwrap();
    let r = record(&[
        "bound",
        "--file",
        path.to_str().unwrap(),
        "--epsilon",
        "1/4",
    ]);
    assert_eq!(r["results"]["bound"], "3");
    std::fs::write(&path, "{\"terms\": 3}").unwrap();
    assert_eq!(
        run(&["bound", "--file", path.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn measures_quantum_chained() {
    let r = record(&["measures", "--quantum-chained", "2"]);
    let expected = 2f64.sqrt() - 1.0;
    assert!((number(&r["results"]["a_f"]["value"]) - expected).abs() < 1e-6);
    assert!((number(&r["results"]["a_c"]["value"]) - expected).abs() < 1e-6);
    assert_eq!(r["mode"], "float");
    let rows = r["results"]["inequalities"].as_array().unwrap();
    assert!((number(&rows[0]["af_lower_bound"]) - expected).abs() < 1e-6);
}

#[test]
fn measures_of_generated_files() {
    let dir = tempfile::tempdir().unwrap();
    let pr = gen_to(dir.path(), "pr.json", &["--pr-box"]);
    let r = record(&["measures", &pr]);
    assert_eq!(r["results"]["a_f"]["value"], "1");
    assert_eq!(r["results"]["a_c"]["value"], "1");
    let uniform = gen_to(dir.path(), "uniform.json", &["--uniform"]);
    let r = record(&["measures", &uniform]);
    assert_eq!(r["results"]["a_f"]["value"], "0");
    assert_eq!(r["results"]["a_c"]["value"], "0");
    // The catalog inequalities come along at three inputs.
    let uniform3 = gen_to(dir.path(), "uniform3.json", &["--uniform", "--m", "3"]);
    let r = record(&["measures", &uniform3]);
    assert!(r["results"]["inequalities"].as_array().unwrap().len() >= 7);
}

#[test]
fn measures_rejects_signalling() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("signal.json");
    let mut b: Value = serde_json::from_slice(&run(&["gen", "--uniform"]).stdout).unwrap();
    // Alice's outcome now depends on Bob's input.
    b["table"]["0,1"] = serde_json::json!([["1/2", "1/2"], ["0", "0"]]);
    std::fs::write(&path, b.to_string()).unwrap();
    let out = run(&["measures", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0.5"));
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["results"]["no_signalling"], false);
}

#[test]
fn gen_uniform_shape() {
    let b: Value = serde_json::from_slice(&run(&["gen", "--uniform", "--m", "3"]).stdout).unwrap();
    let table = b["table"].as_object().unwrap();
    assert_eq!(table.len(), 9);
    for rows in table.values() {
        for row in rows.as_array().unwrap() {
            for p in row.as_array().unwrap() {
                assert_eq!(p, "1/4");
            }
        }
    }
}

#[test]
fn gen_outputs_pass_check() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("pr.json", vec!["--pr-box"]),
        ("q.json", vec!["--quantum-chained", "3"]),
        (
            "qr.json",
            vec!["--quantum-chained", "3", "--mode", "rational"],
        ),
        ("ghz.json", vec!["--ghz"]),
    ] {
        let path = gen_to(dir.path(), name, &args);
        let r = record(&["check", &path]);
        assert_eq!(r["results"]["no_signalling"], true, "{name}");
    }
}

#[test]
fn gen_quantum_chained_value() {
    let b: Value = serde_json::from_slice(&run(&["gen", "--quantum-chained", "3"]).stdout).unwrap();
    let b = nonabsolute::AnyBehavior::from_json(&b).unwrap();
    let ineq = nonabsolute::inequalities::chained(3).unwrap();
    let value = match b {
        nonabsolute::AnyBehavior::Float(b) => ineq.evaluate(&b).unwrap(),
        nonabsolute::AnyBehavior::Rational(_) => panic!("quantum behaviors default to float"),
    };
    assert!((value - 6.0 * (std::f64::consts::PI / 6.0).cos()).abs() < 1e-9);
}

#[test]
fn sweep_csv_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let r = record(&[
        "sweep",
        "--m-range",
        "2..5",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(r["results"]["monotone"], true);
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        [
            "m",
            "quantum_value",
            "lf_bound",
            "ns_bound",
            "a_f",
            "a_c",
            "af_lower_bound",
            "friend_input"
        ]
    );
    let rows: Vec<Vec<f64>> = reader
        .records()
        .map(|r| r.unwrap().iter().map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!((rows[0][1] - 8f64.sqrt()).abs() < 1e-9);
    assert_eq!((rows[0][2], rows[0][3]), (2.0, 4.0));
    for w in rows.windows(2) {
        assert!(w[1][4] >= w[0][4] - 1e-6 && w[1][5] >= w[0][5] - 1e-6);
    }
    assert_eq!(run(&["sweep", "--m-range", "5..2"]).status.code(), Some(1));
}

#[test]
fn records_are_deterministic() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("wall_time_ms");
        v
    };
    let a = strip(record(&["bound", "I_6", "--epsilon", "3/8"]));
    let b = strip(record(&["bound", "I_6", "--epsilon", "3/8"]));
    assert_eq!(a, b);
}
