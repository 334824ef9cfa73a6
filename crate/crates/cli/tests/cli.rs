use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mutalg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut all = vec!["--output", "json"];
    all.extend_from_slice(args);
    let out = run(&all);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn analyze_matching() {
    let s = fixture("matching.structure");
    let (code, v) = json(&["analyze", path(&s), "--relation", "R"]);
    assert_eq!(code, 0);
    assert_eq!(v["uniform_k"], 1);
    assert_eq!(v["subject"], "R");

    let (code, v) = json(&[
        "analyze",
        path(&s),
        "--formula",
        "R(x, y) | R(y, x)",
        "--free",
        "x,y",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["uniform_k"], 1);
}

#[test]
fn analyze_fan_human() {
    let out = run(&[
        "analyze",
        path(&fixture("fan.structure")),
        "--relation",
        "R",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("uniform K = 3"), "{text}");
}

#[test]
fn unknown_relation_is_usage_error() {
    let out = run(&[
        "analyze",
        path(&fixture("matching.structure")),
        "--relation",
        "Nope",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Nope"));
}

#[test]
fn missing_file_and_bad_flags() {
    assert_eq!(
        run(&["analyze", "/no/such/file", "--relation", "R"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["analyze"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn rewrite_cofinite_is_true_above_threshold() {
    let (code, v) = json(&[
        "rewrite",
        "--formula",
        "!R(x, z)",
        "--free",
        "x,z",
        "--eliminate",
        "z",
        "--bound",
        "R=1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["formula"], "true");
    assert_eq!(v["true_above"], v["threshold"]);
    assert_eq!(v["branches"][0]["branch"], "cofinite");
}

#[test]
fn rewrite_verifies_on_reference() {
    let s = fixture("matching.structure");
    let (code, v) = json(&[
        "rewrite",
        "--formula",
        "E z. (R(x, z) & R(y, z))",
        "--reference",
        path(&s),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["verification"]["passed"], true);
    assert!(!v["derivation"].as_array().unwrap().is_empty());
}

#[test]
fn false_bound_puts_reference_outside_the_class() {
    let s = fixture("fan.structure");
    let (code, v) = json(&[
        "rewrite",
        "--formula",
        "R(x, y)",
        "--bound",
        "R=1",
        "--reference",
        path(&s),
    ]);
    assert_eq!(code, 0);
    let v = &v["verification"];
    assert_eq!(v["checked"], 0);
    assert_eq!(v["skipped"][0]["reason"], "axiom_violated");
    assert_eq!(v["certificate_violations"].as_array().unwrap().len(), 1);
}

#[test]
fn eliminating_a_bound_variable_is_rejected() {
    let out = run(&["rewrite", "--formula", "R(x, y)", "--eliminate", "w"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn component_maps() {
    let s = fixture("matching.structure");
    let (code, v) = json(&[
        "components",
        path(&s),
        "--map",
        path(&fixture("matching_swap.map")),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["components"].as_array().unwrap().len(), 3);
    assert_eq!(v["map"]["component_map"], true);
    assert_eq!(v["map"]["isomorphism"], true);

    let (code, v) = json(&[
        "components",
        path(&s),
        "--map",
        path(&fixture("matching_broken.map")),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["map"]["component_map"], false);
    assert_eq!(v["map"]["isomorphism"], false);
}

#[test]
fn mated_pairs_fixture_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("pairs.structure");
    let m = dir.path().join("flip.map");
    let d = dir.path().join("pairs.decomposition");
    let out = run(&[
        "generate",
        "--mated-pairs",
        "3",
        "--out",
        path(&s),
        "--map-out",
        path(&m),
        "--decomposition-out",
        path(&d),
    ]);
    assert!(out.status.success());
    let (code, v) = json(&[
        "components",
        path(&s),
        "--decomposition",
        path(&d),
        "--map",
        path(&m),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["map"]["component_map"], true);
    assert_eq!(v["map"]["isomorphism"], false);
}

#[test]
fn fcp_greedy_and_hypothesis() {
    let s = fixture("matching.structure");
    let params = fixture("params.txt");
    let (code, v) = json(&[
        "fcp",
        path(&s),
        "--formula",
        "R(y, x) & P(x)",
        "--x",
        "x",
        "--params",
        path(&params),
    ]);
    assert_eq!(code, 0);
    // Each parameter's solution set is empty, so every instance is inconsistent alone.
    assert_eq!(v["greedy"]["result"], "inconsistent");
    assert_eq!(v["greedy"]["indices"].as_array().unwrap().len(), 1);

    let (code, v) = json(&[
        "fcp",
        path(&s),
        "--formula",
        "!R(y, x)",
        "--x",
        "x",
        "--params",
        path(&params),
    ]);
    assert_eq!(code, 0);
    assert_eq!(v["greedy"]["result"], "consistent");

    let fan = fixture("fan.structure");
    let out = run(&[
        "fcp",
        path(&fan),
        "--formula",
        "R(y, x)",
        "--x",
        "x",
        "--params",
        path(&params),
        "--k",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fcp_demo_thresholds_grow() {
    let (code, v) = json(&["fcp", "--demo", "4"]);
    assert_eq!(code, 0);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        assert_eq!(r["whole_consistent"], false);
    }
}

#[test]
fn generate_corpus_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(&[
            "--seed",
            "9",
            "generate",
            "--count",
            "4",
            "--out",
            d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for f in ["cases.json", "case-0000.structure", "case-0003.structure"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn verify_suites() {
    let spec = fixture("spec.json");
    for suite in ["evaluator-diff", "fcp-laws", "component-laws"] {
        let (code, v) = json(&["verify", "--spec", path(&spec), "--suite", suite]);
        assert_eq!(code, 0, "{suite}");
        assert_eq!(v["passed"], true);
        assert_eq!(v["cases"], 12);
    }
    let out = run(&["verify", "--spec", path(&spec), "--suite", "bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ma-laws"));
}
