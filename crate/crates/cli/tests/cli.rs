use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SOC_EXAMPLE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/soc_example.cbf");

fn conicert(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conicert")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn soc_example_objective() {
    let o = conicert(&["solve", SOC_EXAMPLE, "--method", "bb", "--rel-gap", "1e-5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["status"], "Optimal");
    assert!((v["objective"].as_f64().unwrap() + 2.0).abs() < 1e-6);
    assert!((v["original_objective"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["sense"], "max");
    assert_eq!(v["solution"].as_array().unwrap().len(), 2);
    for key in ["bound", "rel_gap", "nodes", "subproblems", "iterations", "time_seconds", "options_echo"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("status Optimal"), "{stderr}");
}

#[test]
fn iterative_variant_flags() {
    let o = conicert(&["solve", SOC_EXAMPLE, "--method", "iter", "--no-disaggregate", "--no-scaling"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert!((v["objective"].as_f64().unwrap() + 2.0).abs() < 1e-6);
    let echo = &v["options_echo"];
    assert_eq!(echo["method"], "Iterative");
    assert_eq!(echo["use_disaggregation"], false);
    assert_eq!(echo["use_scaling"], false);
    assert!(v["iterations"].as_u64().unwrap() >= 1);

    let o = conicert(&["solve", SOC_EXAMPLE, "--no-certificate-cuts"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["subproblems"], 0);
}

#[test]
fn usage_and_file_errors() {
    let o = conicert(&["solve", "/nonexistent/x.cbf"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));
    assert!(o.stdout.is_empty());

    assert_eq!(conicert(&["solve", SOC_EXAMPLE, "--bogus"]).status.code(), Some(4));
    assert_eq!(conicert(&["solve", SOC_EXAMPLE, "--method", "x"]).status.code(), Some(4));
    assert_eq!(conicert(&["solve", SOC_EXAMPLE, "--rel-gap", "0"]).status.code(), Some(4));
    assert_eq!(conicert(&["solve"]).status.code(), Some(4));

    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.cbf", "VER\n3\nVAR\n1 1\nQ 1\n");
    let o = conicert(&["solve", &bad]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot parse"));

    // integer without bounds needs a big-M
    let free = write(dir.path(), "free.cbf", "VER\n3\nOBJSENSE\nMIN\nVAR\n1 1\nF 1\nINT\n1\n0\n");
    assert_eq!(conicert(&["solve", &free]).status.code(), Some(4));
    let o = conicert(&["solve", &free, "--default-big-m", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["options_echo"]["default_big_m"], 3);
}

#[test]
fn decided_limit_and_error_codes() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write(
        dir.path(),
        "empty.cbf",
        "VER\n3\nVAR\n1 1\nF 1\nINT\n1\n0\nCON\n2 2\nL+ 1\nL- 1\nACOORD\n2\n0 0 1\n1 0 1\nBCOORD\n2\n0 -0.3\n1 -0.7\n",
    );
    let o = conicert(&["solve", &empty]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["status"], "Infeasible");
    assert!(v["objective"].is_null() && v["solution"].is_null());

    let o = conicert(&["solve", SOC_EXAMPLE, "--method", "iter", "--iteration-limit", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(json(&o)["status"], "IterationLimit");

    // unbounded continuous direction with an integral OA model: OA fail
    let unb = write(
        dir.path(),
        "unb.cbf",
        "VER\n3\nOBJSENSE\nMIN\nVAR\n2 1\nF 2\nINT\n1\n0\nCON\n2 1\nL+ 2\nACOORD\n2\n0 0 1\n1 0 -1\nBCOORD\n1\n1 2\nOBJACOORD\n1\n1 -1\n",
    );
    let o = conicert(&["solve", &unb, "--method", "iter", "--no-certificate-cuts"]);
    let v = json(&o);
    let code = o.status.code().unwrap();
    assert!(
        (code == 3 && v["status"] == "Error") || (code == 0 && v["status"] == "Unbounded"),
        "{code} {v}"
    );
}

#[test]
fn out_file_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut docs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("r{k}.json"));
        let o = conicert(&["solve", SOC_EXAMPLE, "--method", "iter", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        let text = std::fs::read_to_string(&out).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(serde_json::from_str::<Value>(&serde_json::to_string(&v).unwrap()).unwrap(), v);
        assert_eq!(v["options_echo"]["seed"], 7);
        docs.push(v);
    }
    for key in ["status", "objective", "bound", "solution", "nodes", "subproblems", "iterations", "options_echo"] {
        assert_eq!(docs[0][key], docs[1][key], "{key}");
    }
}
