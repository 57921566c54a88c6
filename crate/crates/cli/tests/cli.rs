use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn gcstar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcstar")).args(args).output().expect("binary runs")
}

fn json_of(args: &[&str]) -> Value {
    let out = gcstar(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn tmp(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gcstar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

// pair groupoid on {x,y} with the composite a·b dropped
const BROKEN: &str = r#"{
  "objects": ["x", "y"],
  "arrows": [
    {"id": "ex", "src": "x", "rng": "x"}, {"id": "ey", "src": "y", "rng": "y"},
    {"id": "a", "src": "x", "rng": "y"}, {"id": "b", "src": "y", "rng": "x"}
  ],
  "inverse": {"ex": "ex", "ey": "ey", "a": "b", "b": "a"},
  "compose": [
    ["ex", "ex", "ex"], ["ey", "ey", "ey"], ["a", "ex", "a"], ["ey", "a", "a"],
    ["b", "ey", "b"], ["ex", "b", "b"], ["b", "a", "ex"]
  ]
}"#;

#[test]
fn suite_default_passes() {
    let out = gcstar(&["suite", "--trials", "20", "--seed", "7"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("0 failed"));
}

#[test]
fn broken_groupoid_exits_2_with_witness() {
    let p = tmp("broken.json", BROKEN);
    let out = gcstar(&["validate", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("invalid"), "{err}");
    assert!(err.contains('a') && err.contains('b'), "{err}");
}

#[test]
fn malformed_json_exits_2() {
    let p = tmp("garbage.json", "{ not json");
    assert_eq!(gcstar(&["validate", p.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(gcstar(&["algebra", "--preset", "nope"]).status.code(), Some(2));
}

#[test]
fn bad_flags_exit_2() {
    assert_eq!(gcstar(&["algebra", "--preset", "P2", "--tolerance", "0"]).status.code(), Some(2));
    assert_eq!(gcstar(&["algebra", "--preset", "P2", "--tolerance", "-1"]).status.code(), Some(2));
    assert_eq!(gcstar(&["roundtrip", "--preset", "P2", "--trials", "0"]).status.code(), Some(2));
}

#[test]
fn algebra_pair2_norms() {
    let v = json_of(&["algebra", "--preset", "pair:2", "--json"]);
    assert_eq!(v["schema_version"], 1);
    let inorm = v["data"]["inorm"].as_object().unwrap();
    assert_eq!(inorm.len(), 4);
    for (_, x) in inorm {
        assert!((x.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    assert_eq!(v["data"]["product"].as_array().unwrap().len(), 8);
    assert_eq!(v["data"]["pattern"], "M2");
}

#[test]
fn json_deterministic_apart_from_timing() {
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    for args in [
        &["roundtrip", "--preset", "W2", "--seed", "3", "--json"][..],
        &["families", "--preset", "W2", "--json"][..],
        &["etale", "--preset", "X2", "--seed", "1", "--json"][..],
    ] {
        assert_eq!(strip(json_of(args)), strip(json_of(args)));
    }
}

#[test]
fn checks_sorted_by_name() {
    let v = json_of(&["disintegrate", "--preset", "W2", "--json"]);
    let names: Vec<&str> = v["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    let mut sorted = names.clone();
    sorted.sort();
    assert_eq!(names, sorted);
}

#[test]
fn w2_haar_from_validate() {
    let v = json_of(&["validate", "--preset", "W2", "--json"]);
    assert!(v["passed"].as_bool().unwrap());
    let haar = v["data"]["haar"].as_object().unwrap();
    let mut w: Vec<f64> = haar.values().map(|x| x.as_f64().unwrap()).collect();
    w.sort_by(f64::total_cmp);
    assert_eq!(w, vec![1.0, 4.0]);
}

#[test]
fn groupoid_file_round_trip_through_cli() {
    let v = json_of(&["validate", "--preset", "P2", "--json"]);
    assert_eq!(v["data"]["arrows"], 4);
    let good = BROKEN.replace(r#"["b", "a", "ex"]"#, r#"["b", "a", "ex"], ["a", "b", "ey"]"#);
    let p = tmp("p2.json", &good);
    let f = p.to_str().unwrap();
    let a = json_of(&["algebra", "--groupoid", f, "--json"]);
    assert_eq!(a["data"]["pattern"], "M2");
    assert!(json_of(&["etale", "--groupoid", f, "--json"])["passed"].as_bool().unwrap());
}

#[test]
fn dump_writes_manifest() {
    let dir = std::env::temp_dir().join(format!("gcstar-dump-{}", std::process::id()));
    let out = gcstar(&["integrate", "--preset", "P2", "--dump", dir.to_str().unwrap()]);
    assert!(out.status.success());
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.as_array().unwrap().len(), 4);
}

#[test]
fn trafo_and_rep_bundle() {
    assert!(json_of(&["trafo", "--preset", "T2", "--json"])["passed"].as_bool().unwrap());
    let bundle = r#"{
      "groupoid": {"objects": ["x"], "arrows": [{"id": "e", "src": "x", "rng": "x"}, {"id": "s", "src": "x", "rng": "x"}],
                   "inverse": {"e": "e", "s": "s"},
                   "compose": [["e","e","e"], ["e","s","s"], ["s","e","s"], ["s","s","e"]]},
      "dims": {"x": 2},
      "U": {"s": [[0, 1], [1, 0]]}
    }"#;
    let p = tmp("swap.json", bundle);
    let v = json_of(&["rep", "check", p.to_str().unwrap(), "--json"]);
    assert!(v["passed"].as_bool().unwrap());
    let bad = bundle.replace("[[0, 1], [1, 0]]", "[[0, 1], [1, 1]]");
    let p = tmp("bad.json", &bad);
    assert_eq!(gcstar(&["rep", p.to_str().unwrap()]).status.code(), Some(1));
}
