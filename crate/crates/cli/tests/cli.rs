use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "corpus", name]
        .iter()
        .collect();
    p.display().to_string()
}

fn triguard(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_triguard"))
        .args(args)
        .env_remove("TGCHECK_MAX_PAIRS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn classify_tg_exit_codes() {
    let s1 = corpus("sigma1.dlg");
    let s2 = corpus("sigma2.dlg");
    assert_eq!(code(&triguard(&["classify", "--class", "tg", &s1])), 0);
    let o = triguard(&["classify", "--class", "tg", &s2]);
    assert_eq!(code(&o), 1);
    let doc = json(&o);
    assert_eq!(doc["verdicts"]["TG"]["verdict"], "not_tg");
    assert_eq!(doc["witnesses"].as_array().unwrap().len(), 1);
    assert_eq!(code(&triguard(&["classify", "--class", "tg", "no/such/file.dlg"])), 2);
}

#[test]
fn classify_baselines_on_sigma1() {
    let s1 = corpus("sigma1.dlg");
    for class in ["wa", "guarded", "sticky", "shy"] {
        let o = triguard(&["classify", "--class", class, &s1]);
        assert_eq!(code(&o), 1, "{class}");
    }
    let doc = json(&triguard(&["classify", &s1]));
    for key in ["WA", "GUARDED", "STICKY", "SHY"] {
        assert_eq!(doc["verdicts"][key]["member"], false, "{key}");
    }
    assert_eq!(doc["verdicts"]["TG"]["member"], true);
    assert_eq!(code(&triguard(&["classify", "--class", "wa", &corpus("wa.dlg")])), 0);
}

#[test]
fn bad_usage_is_exit_two() {
    assert_eq!(code(&triguard(&["classify", "--class", "nope", "x"])), 2);
    assert_eq!(code(&triguard(&["frobnicate"])), 2);
}

#[test]
fn report_document_shape_and_digest() {
    let s1 = corpus("sigma1.dlg");
    let doc = json(&triguard(&["classify", "--class", "tg", &s1]));
    assert_eq!(doc["command"], "classify");
    assert!(doc["tool_version"].is_string());
    assert!(doc.get("timings").is_none());
    let digest = doc["inputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    let timed = json(&triguard(&["--timings", "classify", "--class", "tg", &s1]));
    assert!(timed["timings"]["total_ms"].is_number());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let s3 = corpus("sigma3.dlg");
    let s2 = corpus("sigma2.dlg");
    let d2 = corpus("d2.facts");
    for args in [
        vec!["classify", s3.as_str()],
        vec!["rtc", "--explain", s3.as_str()],
        vec!["chase", "--depth", "3", s2.as_str(), d2.as_str()],
        vec!["extend", "--levels", "2", s3.as_str()],
        vec!["graph", s3.as_str()],
    ] {
        let a = triguard(&args);
        let b = triguard(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_ne!(code(&a), 2, "{args:?}");
        assert!(!a.stdout.is_empty());
    }
}

#[test]
fn ask_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = triguard(&[
        "ask",
        "--depth",
        "5",
        &corpus("sigma2.dlg"),
        &corpus("d2.facts"),
        &corpus("q2.q"),
    ]);
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["verdicts"]["outcome"], "UnknownUpTo");

    let empty = dir.path().join("empty.dlg");
    let facts = dir.path().join("f.facts");
    fs::write(&empty, "").unwrap();
    fs::write(&facts, "t(c1, c1).\n").unwrap();
    let o = triguard(&[
        "ask",
        empty.to_str().unwrap(),
        facts.to_str().unwrap(),
        &corpus("q2.q"),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdicts"]["outcome"], "Entailed");

    let bad = dir.path().join("bad.q");
    fs::write(&bad, "?- t(X,").unwrap();
    let o = triguard(&[
        "ask",
        &corpus("sigma2.dlg"),
        &corpus("d2.facts"),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn chase_writes_levels_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("facts.json");
    let o = triguard(&[
        "chase",
        "--depth",
        "1",
        "--out",
        out.to_str().unwrap(),
        &corpus("sigma2.dlg"),
        &corpus("d2.facts"),
    ]);
    assert_eq!(code(&o), 0);
    let inst: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let atoms = inst["atoms"].as_array().unwrap();
    let level_one: Vec<&str> = atoms
        .iter()
        .filter(|a| a["level"] == 1)
        .map(|a| a["atom"].as_str().unwrap())
        .collect();
    assert_eq!(level_one, ["t(c2, _n1)", "u(c2, _n1)"]);
    assert!(atoms.iter().filter(|a| a["level"] == 1).all(|a| a["rule"] == "s11"));
}

#[test]
fn graph_output() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.dlg");
    fs::write(&plain, "r: p(X, Y) -> q(Y).\n").unwrap();
    let o = triguard(&["graph", plain.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(!dot.contains("n_"), "{dot}");

    let o = triguard(&["graph", &corpus("sigma2.dlg")]);
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.contains("\"n_s11_Z\" [style=filled, fillcolor=lightcoral, cyclic=true]"));
}

#[test]
fn env_sets_the_pair_limit() {
    let o = Command::new(env!("CARGO_BIN_EXE_triguard"))
        .args(["extend", &corpus("sigma3.dlg")])
        .env("TGCHECK_MAX_PAIRS", "10")
        .output()
        .unwrap();
    assert_eq!(code(&o), 3);
    assert_eq!(json(&o)["verdicts"]["pairs"], 10);
}

#[test]
fn probe_counts_violations() {
    let o = triguard(&[
        "probe",
        "--shape",
        "t(X,Y), u(Y,Z)",
        "--bounds",
        "2,4,2",
        &corpus("sigma1.dlg"),
        &corpus("d2.facts"),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["verdicts"]["violations"], 0);
    let o = triguard(&[
        "probe",
        "--shape",
        "t(X,Y)",
        &corpus("sigma2.dlg"),
        &corpus("d2.facts"),
    ]);
    assert_eq!(code(&o), 1);
    assert!(json(&o)["verdicts"]["violations"].as_u64().unwrap() >= 1);
    let o = triguard(&[
        "probe",
        "--shape",
        "t(X,Y)",
        "--bounds",
        "4,2,1",
        &corpus("sigma2.dlg"),
        &corpus("d2.facts"),
    ]);
    assert_eq!(code(&o), 2);
}

#[test]
fn gen_and_nullsets_and_text() {
    let o = triguard(&["gen", "--seed", "11", "--format", "text"]);
    assert_eq!(code(&o), 0);
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("g.dlg");
    fs::write(&f, &o.stdout).unwrap();
    assert_eq!(code(&triguard(&["nullsets", f.to_str().unwrap()])), 0);

    let doc = json(&triguard(&["nullsets", &corpus("sigma2.dlg")]));
    assert_eq!(doc["verdicts"]["cyclic"][0], "n_s11_Z");
    let o = triguard(&["--format", "text", "rtc", "--explain", &corpus("sigma2.dlg")]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("validated: true"), "{text}");
}

#[test]
fn explained_witness_names_every_field() {
    let o = triguard(&["rtc", "--explain", &corpus("sigma2.dlg")]);
    assert_eq!(code(&o), 1);
    let w = &json(&o)["witnesses"][0];
    for field in [
        "pair",
        "a",
        "b",
        "c",
        "x",
        "z",
        "a_prime",
        "theta",
        "via",
        "link_path",
        "failing_edge",
        "failing_link_var",
        "markup_evidence",
        "m_var",
        "guard",
        "validated",
    ] {
        assert!(w.get(field).is_some(), "{field}");
    }
    assert_eq!(w["validated"], true);
}
